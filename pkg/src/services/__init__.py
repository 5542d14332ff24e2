"""Search algorithms (PBT, random search, MO-ASHA, NSGA-II) and experiment orchestration."""
