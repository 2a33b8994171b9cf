from gym.wrappers import record_video
