"""Real-time orchestration: recording, replay, service, and fan-out."""

from fibersense.pipeline.config import (
    DownsampleConfig,
    LayoutConfig,
    PipelineConfig,
    load_config,
)
from fibersense.pipeline.engine import (
    BlockProcessor,
    LivePipeline,
    SubscriberBuffer,
    quantize_block,
    run_offline,
)
from fibersense.pipeline.events import EventLog, EventRecord, read_event_log
from fibersense.pipeline.potd import PotdHeader, PotdReader, PotdWriter, parse_header
from fibersense.pipeline.tiles import TilePacket, make_tile

__all__ = [
    "BlockProcessor",
    "DownsampleConfig",
    "EventLog",
    "EventRecord",
    "LayoutConfig",
    "LivePipeline",
    "PipelineConfig",
    "PotdHeader",
    "PotdReader",
    "PotdWriter",
    "SubscriberBuffer",
    "TilePacket",
    "load_config",
    "make_tile",
    "parse_header",
    "quantize_block",
    "read_event_log",
    "run_offline",
]
