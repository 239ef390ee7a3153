"""
Test Package

This package contains unit and closed-loop tests for the obstacle avoidance testbed.
"""
