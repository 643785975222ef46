from importlib.resources import files

PKG_PATH = files("stirapoc")
SCENARIOS_PATH = PKG_PATH.joinpath("config")
SIMULATE_CONFIG_PATH = SCENARIOS_PATH.joinpath("simulate.yml")
EXTREMAL_CONFIG_PATH = SCENARIOS_PATH.joinpath("extremal.yml")
STIRAP_CONFIG_PATH = SCENARIOS_PATH.joinpath("stirap.yml")
TRIPOD_CONFIG_PATH = SCENARIOS_PATH.joinpath("tripod.yml")
MOMENTUM_MAP_CONFIG_PATH = SCENARIOS_PATH.joinpath("momentum_map.yml")
REDUCE_CONFIG_PATH = SCENARIOS_PATH.joinpath("reduce.yml")
SEARCH_CONFIG_PATH = SCENARIOS_PATH.joinpath("search.yml")
