"""Energy-based neural-network pruning with binary differential evolution."""

from .bde import (BdeParams, ConvergenceStatus, Population, crossover, delta_s,
                  init_population, mutate, select, step)
from .data import Dataset, batch_iter, gen_blobs, gen_spirals, load_csv, load_idx
from .energy import (EnergySample, GibbsParams, batch_energy_loss, energy_loss,
                     gibbs_probabilities, hamiltonian)
from .nn import (DenseLayer, DivergenceError, Network, UnitLayout, count_params,
                 forward_masked, init_network, sgd_step, topk_accuracy)
from .trainer import (RunMetrics, TrainConfig, evaluate, fine_tune,
                      magnitude_prune_baseline, train_epruning)

__version__ = "0.1.0"
