"""Compare the evolved mask with plain magnitude pruning at the same budget.

Magnitude pruning trains densely first, drops the units with the smallest
incoming weight norm until the kept-parameter ratio fits, then fine-tunes.
"""
from epruning import data, report, trainer
from epruning.bde import BdeParams
from epruning.nn import init_network, kept_ratio

full = data.gen_blobs(625, 4, 2, spread=0.7, seed=0)
train, test = data.train_test_split(full, 0.2, seed=0)
config = trainer.TrainConfig(epochs=50, stagnation_threshold=25, bde=BdeParams(seed=2), seed=2)

net, mask, _ = trainer.train_epruning(config, init_network(2, [64, 64], 4, seed=2), train, test)
target = kept_ratio(net, mask)
print(f"evolved mask keeps {target:.1%} of the parameters")

base_net, base_mask, _ = trainer.run_baseline(config, init_network(2, [64, 64], 4, seed=2),
                                              train, test, target)
rows = [report.table_row("EPruning(P)", net, mask, test),
        report.table_row("Magnitude(P)", base_net, base_mask, test)]
print(report.format_table(rows))
