# Test suite for the multi-objective PBT toolkit
