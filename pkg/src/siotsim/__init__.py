"""Simulator for bridging separate interest communities in a decentralized
social network through social-device relays.

The pipeline builds human friendship and device-relationship graphs from
check-in traces, runs an anonymous TTL-bounded interest-profile propagation
protocol that establishes co-interest device links, and measures how much
those links increase content reachability across otherwise disconnected
interest communities.
"""

__version__ = "0.1.0"
