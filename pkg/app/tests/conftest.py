def pytest_configure(config):
    config.addinivalue_line(
        "markers", "slow: closed-loop scenario runs; deselect with -m 'not slow'"
    )
