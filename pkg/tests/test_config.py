"""Config file parsing: defaults, required keys, and line-numbered errors."""

import pytest

from qosgp.config import ExperimentConfig, GpOptions, load_experiment_config
from qosgp.errors import ConfigError
from qosgp.kernels import KernelVariant, default_kernel
from qosgp.simulator import SimulationConfig

FULL_CONFIG = """\
[experiment]
replications = 4
alpha = 0.01
master_seed = 99
output_dir = results
split = random

[simulator]
num_classes = 2
arrival_prob = 0.4
lognormal_mu = 0.5, 0.1
lognormal_sigma = 0.25, 0.5
execution_rates = 1.25, 1.5
window = 8
num_train = 50
num_test = 25
horizon = 500
seed = 3
feature_mode = instantaneous
queue_measure = count

[gp]
noise_variance = 0.2
learn_noise = false
max_iterations = 50
tolerance = 1e-6
restarts = 1

[kernels]
names = linear, composite

[cart]
min_leaf = 3
max_depth = 12
min_impurity_decrease = 0.5
"""

MINIMAL_CONFIG = """\
[simulator]
num_classes = 1
arrival_prob = 0.5
lognormal_mu = 0.0
lognormal_sigma = 1.0
execution_rates = 1.0
window = 5
num_train = 10
num_test = 10
"""


def write(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_full_config_round_trip(tmp_path):
    cfg = load_experiment_config(write(tmp_path, FULL_CONFIG))
    assert cfg.replications == 4
    assert cfg.alpha == 0.01
    assert cfg.master_seed == 99
    assert cfg.output_dir == "results"
    assert cfg.split_policy == "random"
    sim = cfg.simulator
    assert sim.num_classes == 2
    assert sim.arrival_prob == 0.4
    assert sim.lognormal_params == ((0.5, 0.25), (0.1, 0.5))
    assert sim.execution_rates == (1.25, 1.5)
    assert sim.window == 8
    assert (sim.num_train, sim.num_test, sim.horizon, sim.seed) == (50, 25, 500, 3)
    assert sim.feature_mode == "instantaneous"
    assert sim.queue_measure == "count"
    assert cfg.gp == GpOptions(0.2, False, 50, 1e-6, 1)
    assert (cfg.cart.min_leaf, cfg.cart.max_depth, cfg.cart.min_impurity_decrease) == (3, 12, 0.5)
    assert [k.variant for k in cfg.kernels] == [KernelVariant.LINEAR, KernelVariant.COMPOSITE]
    assert all(k.input_dim == 2 for k in cfg.kernels)


def test_minimal_config_uses_defaults(tmp_path):
    cfg = load_experiment_config(write(tmp_path, MINIMAL_CONFIG))
    assert cfg.replications == 1
    assert cfg.alpha == 0.05
    assert cfg.split_policy == "temporal"
    assert cfg.gp == GpOptions()
    assert [k.variant.value for k in cfg.kernels] == ["linear", "se", "composite"]
    assert cfg.simulator.horizon == 0
    assert cfg.simulator.feature_mode == "window_mean"
    assert cfg.simulator.queue_measure == "total_size"


def test_missing_file_raises_config_error(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_experiment_config(tmp_path / "nope.cfg")


def test_missing_simulator_section(tmp_path):
    path = write(tmp_path, "[experiment]\nreplications = 2\n")
    with pytest.raises(ConfigError, match=r"\[simulator\]"):
        load_experiment_config(path)


def test_missing_required_key_names_it(tmp_path):
    text = MINIMAL_CONFIG.replace("arrival_prob = 0.5\n", "")
    with pytest.raises(ConfigError, match="arrival_prob"):
        load_experiment_config(write(tmp_path, text))


def test_bad_value_carries_line_number(tmp_path):
    text = MINIMAL_CONFIG.replace("window = 5", "window = soon")
    path = write(tmp_path, text)
    with pytest.raises(ConfigError) as info:
        load_experiment_config(path)
    err = info.value
    assert err.path == str(path)
    assert err.line == 7  # the `window = soon` line
    assert f"{path}:7:" in str(err)


def test_semantic_error_carries_line_number(tmp_path):
    text = MINIMAL_CONFIG.replace("arrival_prob = 0.5", "arrival_prob = 1.5")
    with pytest.raises(ConfigError, match="arrival_prob must be in"):
        load_experiment_config(write(tmp_path, text))


def test_lognormal_length_mismatch(tmp_path):
    text = MINIMAL_CONFIG.replace("lognormal_sigma = 1.0", "lognormal_sigma = 1.0, 2.0")
    with pytest.raises(ConfigError, match="lognormal_mu has 1 entries"):
        load_experiment_config(write(tmp_path, text))


def test_unknown_kernel_name(tmp_path):
    text = MINIMAL_CONFIG + "\n[kernels]\nnames = linear, spectral\n"
    with pytest.raises(ConfigError, match="unknown kernel 'spectral'"):
        load_experiment_config(write(tmp_path, text))


def test_duplicate_kernel_names(tmp_path):
    text = MINIMAL_CONFIG + "\n[kernels]\nnames = linear, linear\n"
    with pytest.raises(ConfigError, match="duplicate"):
        load_experiment_config(write(tmp_path, text))


def test_bad_split_policy(tmp_path):
    text = MINIMAL_CONFIG + "\n[experiment]\nsplit = shuffled\n"
    with pytest.raises(ConfigError, match="split"):
        load_experiment_config(write(tmp_path, text))


def test_malformed_syntax_reports_line(tmp_path):
    path = write(tmp_path, "[simulator]\nnum_classes\n")
    with pytest.raises(ConfigError):
        load_experiment_config(path)


def test_gp_options_validation():
    with pytest.raises(ValueError):
        GpOptions(noise_variance=0.0)
    with pytest.raises(ValueError):
        GpOptions(max_iterations=-1)
    with pytest.raises(ValueError):
        GpOptions(tolerance=0.0)
    with pytest.raises(ValueError):
        GpOptions(restarts=-1)


def simulator_config():
    return SimulationConfig(
        num_classes=1, arrival_prob=0.5, lognormal_params=((0.0, 1.0),),
        execution_rates=(1.0,), window=5, num_train=10, num_test=10,
    )


def test_experiment_config_validation():
    sim = simulator_config()
    kernels = (default_kernel("linear", 1),)
    with pytest.raises(ValueError, match="replications"):
        ExperimentConfig(simulator=sim, kernels=kernels, replications=0)
    with pytest.raises(ValueError, match="alpha"):
        ExperimentConfig(simulator=sim, kernels=kernels, alpha=0.0)
    with pytest.raises(ValueError, match="duplicate"):
        ExperimentConfig(simulator=sim, kernels=kernels * 2)
    with pytest.raises(ValueError, match="split"):
        ExperimentConfig(simulator=sim, kernels=kernels, split_policy="none")
