import logging

from freezegun import freeze_time

from surveyfda.worker.progress import ProgressLogger


def test_progress_logs_typical(caplog):
    caplog.set_level(logging.INFO, logger="surveyfda")

    with freeze_time() as time:
        logger = ProgressLogger(message="testing", items_total=100)

        # Initial log
        logger.update(5)

        # More logs - should not generate anything because not enough
        # time has passed
        logger.update(5)
        logger.update(5)

        # Let time pass
        time.tick(10)

        # Now an update should do something
        logger.update(5)

        # Let time pass again
        time.tick(10)
        logger.update(5)

        # OK, let's finish up; reaching the total always logs
        logger.update(100 - 5 * 5)

    # This is what it should have logged...
    assert caplog.messages == [
        "testing: 5 (of 100) [ 5% ] [0.0 p/sec]",
        "testing: 20 (of 100) [20% ] [2.0 p/sec]",
        "testing: 25 (of 100) [25% ] [1.2 p/sec]",
        "testing: 100 (of 100) [100% ] [5.0 p/sec]",
    ]


def test_progress_extra_fields(caplog):
    caplog.set_level(logging.INFO, logger="surveyfda")

    logger = ProgressLogger(
        message="Gibbs sweeps (chain 2)",
        items_total=10,
        interval=0.0,
        extra={"chain": 2},
    )
    logger.update(3)
    logger.update(3)
    logger.update(4)

    assert len(caplog.records) == 3
    assert all(r.event == "progress" for r in caplog.records)
    assert all(r.chain == 2 for r in caplog.records)
