from gym.wrappers.monitor import Monitor
