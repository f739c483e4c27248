from .base import DataPacket, RoutingProtocol
from .dsdv import DsdvRouter
from .aodv import AodvRouter
from .dsr import DsrRouter

PROTOCOLS = {
    "DSDV": DsdvRouter,
    "AODV": AodvRouter,
    "DSR": DsrRouter,
}


def make_router(name, node_id, sim, radio, trace, rng, **kwargs):
    try:
        cls = PROTOCOLS[name.upper()]
    except KeyError:
        raise ValueError(f"unknown protocol {name!r}") from None
    return cls(node_id, sim, radio, trace, rng, **kwargs)


__all__ = ["DataPacket", "RoutingProtocol", "DsdvRouter", "AodvRouter",
           "DsrRouter", "PROTOCOLS", "make_router"]
