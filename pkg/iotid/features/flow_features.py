from __future__ import annotations

from typing import Iterable, List, Optional

import numpy as np

from ..core.types import FlowFeatureRow, FlowRecord
from ..flows.domain_map import DomainMap
from .moments import moments


def extract_flow_features(flow: FlowRecord, domain_map: Optional[DomainMap] = None) -> FlowFeatureRow:
    if flow.packet_count < 1:
        raise ValueError("flow record has no packets")
    ipt = moments(np.diff(np.asarray(flow.pkt_times, dtype=np.float64)))
    sizes = moments(flow.pkt_sizes)
    if domain_map is not None:
        domain = domain_map.resolve(flow.device_id, flow.key.dst_ip, flow.start_time)
    else:
        domain = flow.remote_domain
    return FlowFeatureRow(
        device_id=flow.device_id,
        start_time=flow.start_time,
        src_port=flow.key.src_port,
        dest_port=flow.key.dst_port,
        bytes_out=flow.bytes_out,
        bytes_in=flow.bytes_in,
        pkts_out=flow.pkts_out,
        pkts_in=flow.pkts_in,
        ipt_mean=ipt.mean,
        ipt_std=ipt.std,
        ipt_var=ipt.var,
        ipt_skew=ipt.skew,
        ipt_kurtosis=ipt.kurtosis,
        b_mean=sizes.mean,
        b_std=sizes.std,
        b_var=sizes.var,
        b_skew=sizes.skew,
        b_kurtosis=sizes.kurtosis,
        duration=flow.duration,
        protocol=int(flow.key.transport),
        domain=domain,
    )


def extract_all_flow_features(flows: Iterable[FlowRecord],
                              domain_map: Optional[DomainMap] = None) -> List[FlowFeatureRow]:
    return [extract_flow_features(f, domain_map) for f in flows]
