"""Test suite for the poc-set memory toolkit."""
