import json
import logging

from freezegun import freeze_time

from surveyfda.logging import RunIdFilter, loggers_init, run_id
from surveyfda.settings import load_settings


def test_log_levels():
    """Ensure loggers are configured according to surveyfda.ini."""

    logging.getLogger().setLevel("INFO")
    logging.getLogger("old-logger").setLevel("DEBUG")

    loggers_init(load_settings())

    # Should not alter existing loggers.
    assert logging.getLogger("old-logger").level == logging.DEBUG

    # Should set level of new loggers according to surveyfda.ini.
    assert logging.getLogger().level == logging.WARN
    assert logging.getLogger("surveyfda").level == logging.INFO


def test_log_handler():
    """Ensure handler is added to root logger when none are present"""

    root_logger = logging.getLogger()
    root_handlers = root_logger.handlers

    # Clear existing handlers.
    root_handlers.clear()
    assert not root_handlers

    loggers_init(load_settings())

    # Should now have one (1) StreamHandler
    assert len(root_handlers) == 1
    assert type(root_handlers[0]) == logging.StreamHandler
    assert [type(f) for f in root_handlers[0].filters] == [RunIdFilter]

    # A second init does not stack filters.
    loggers_init(load_settings())
    assert len(root_handlers[0].filters) == 1


@freeze_time("2023-04-26 14:43:13.570034+00:00")
def test_json_logger_configurable_datefmt(caplog):
    """Ensure logger's datefmt is configurable"""

    settings = load_settings()
    settings.log_config["datefmt"] = "%H:%M on %A, %B %d, %Y"

    loggers_init(settings)
    logging.getLogger("surveyfda").info("...")

    # Logged timestamp should be formatted as configured in settings,
    # default: "2023-04-26 14:43:13.570"
    assert '"time": "14:43 on Wednesday, April 26, 2023"' in caplog.text


@freeze_time("2023-04-26 14:43:13.570034+00:00")
def test_json_logger_default_datefmt(caplog):
    loggers_init(load_settings())
    logging.getLogger("surveyfda").info("...")

    assert '"time": "2023-04-26 14:43:13.570"' in caplog.text


def test_json_logger_stack_info(caplog):
    loggers_init(load_settings())
    logging.getLogger("surveyfda").exception("oops", stack_info=True)
    assert '"stack_info": "Stack (most recent call last)' in caplog.text


def test_json_logger_structured_fields(caplog):
    loggers_init(load_settings())
    token = run_id.set("run-1234")
    try:
        logging.getLogger("surveyfda").info(
            "Replicate %d done",
            3,
            extra={"event": "simulation", "replicate": 3, "model_tag": "SM-W"},
        )
    finally:
        run_id.reset(token)

    record = json.loads(caplog.text.strip().splitlines()[-1])
    assert record["message"] == "Replicate 3 done"
    assert record["run_id"] == "run-1234"
    assert record["event"] == "simulation"
    assert record["replicate"] == 3
    assert record["model_tag"] == "SM-W"
    assert "chain" not in record
