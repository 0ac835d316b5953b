"""Payoffs referenced by import path in the claim tests."""

import numpy as np


def first_asset(prices: np.ndarray) -> np.ndarray:
    return prices[:, 0]


def basket(prices: np.ndarray) -> np.ndarray:
    return prices.mean(axis=1)


def negative(prices: np.ndarray) -> np.ndarray:
    return -prices[:, 0]
