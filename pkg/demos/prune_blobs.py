"""Train a 2-64-64-4 network on Gaussian blobs while searching for a unit mask.

The first epochs run the mask search alongside SGD; once the population
agrees, or the stagnation threshold passes, the best mask is frozen and the
remaining epochs only fine-tune the surviving units.
"""
from epruning import data, report, trainer
from epruning.bde import BdeParams
from epruning.nn import init_network

full = data.gen_blobs(625, 4, 2, spread=0.7, seed=0)
train, test = data.train_test_split(full, 0.2, seed=0)

config = trainer.TrainConfig(epochs=50, stagnation_threshold=25, population_size=8,
                             bde=BdeParams(0.5, 0.9, seed=1), seed=1)
net = init_network(2, [64, 64], 4, seed=1)
net, mask, metrics = trainer.train_epruning(config, net, train, test)

for row in metrics.rows[:: 5]:
    print(f"epoch {row['epoch']:2d} {row['phase']:8s} ce={row['ce_loss']:.4f} "
          f"test top1={row['test_top1']:.3f} R={row['R']:.1f}%")

switch = metrics.column("phase").index("finetune") + 1
print(f"mask frozen from epoch {switch}; units kept: {int(mask.sum())} of {mask.size}")
print(report.format_table(report.full_and_pruned("EPruning", net, mask, test)))
