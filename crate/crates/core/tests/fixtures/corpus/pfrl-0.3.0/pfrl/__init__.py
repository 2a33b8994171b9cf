import gym

from pfrl import wrappers
