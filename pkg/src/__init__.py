# Multi-objective population based training
