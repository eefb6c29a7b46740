class Constants:
    REPORT_SCHEMA_VERSION = "1.0"
    OUT_DIR_ENV_VAR = "BRIDGE_DIFFUSION_OUT_DIR"
    RESOLVED_CONFIG_FILE_NAME = "resolved_config.json"

    # Parameterisations published for the two processes
    PRESETS = {
        "ouve-paper": {"variant": "ouve", "gamma": 1.5, "c": 0.01, "k": 10.0, "T": 1.0},
        "bbed-paper": {"variant": "bbed", "c": 0.51, "k": 2.6, "T": 0.999},
    }

    BBED_K_GRID = (0.02, 0.2, 0.6, 1.1, 1.5, 2.6, 5.0, 27.0)
    BBED_T_GRID = (0.9, 0.99, 0.999, 0.9999)
    PEAK_VARIANCE_TARGETS = (0.15, 0.3)

    SAMPLE_RATE = 16000
    PCM_SUBTYPE = "PCM_16"
