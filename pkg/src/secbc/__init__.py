"""Secrecy analysis toolkit for degraded broadcast channels with encoder
side information: probability primitives, channel models, achievable-rate
regions, random-binning codecs, Monte-Carlo trials, and a CLI.
"""

from .channels import (
    ChannelModel,
    ConfigError,
    SideInfoMode,
    VARIANTS,
    binary_example_model,
    binary_secrecy_capacity_oracle,
    cascade,
    load_model_config,
    parse_model_config,
)
from .codec import (
    BlockRecord,
    Codebook,
    CodebookCounts,
    CodeParams,
    DecodingError,
    EncodeResult,
    EncodingError,
    FeedbackSession,
    ParameterError,
    build_codebook,
    causal_encode,
    decode_rx1,
    decode_rx2,
    decrypt,
    empirical_joint,
    encrypt,
    gp_encode,
    is_typical,
    key_from_feedback,
    one_time_pad_joint,
    population,
    run_block_markov,
    synthesize_x,
    transmit,
)
from .prob import (
    CondPmf,
    DistributionError,
    FinitePmf,
    JointPmf,
    binary_entropy,
    condition_on,
    conditional_mutual_information,
    entropy,
    is_markov_chain,
    mutual_information,
)
from .regions import (
    AuxiliaryJoint,
    BoundSet,
    RateTriple,
    RegionError,
    ScanPoint,
    THEOREMS,
    eval_bounds,
    extend_to_full_joint,
    membership,
    region_scan,
    remark_caps,
    secrecy_capacity,
    secrecy_capacity_search,
    state_cancelling_aux,
    theorem_mode,
)
from .sim import (
    SimReport,
    conditional_output_entropy_rate,
    exact_equivocation,
    run_trials,
)

__version__ = "1.0.0"

__all__ = [
    "__version__",
    # prob
    "CondPmf",
    "DistributionError",
    "FinitePmf",
    "JointPmf",
    "binary_entropy",
    "condition_on",
    "conditional_mutual_information",
    "entropy",
    "is_markov_chain",
    "mutual_information",
    # channels
    "ChannelModel",
    "ConfigError",
    "SideInfoMode",
    "VARIANTS",
    "binary_example_model",
    "binary_secrecy_capacity_oracle",
    "cascade",
    "load_model_config",
    "parse_model_config",
    # regions
    "AuxiliaryJoint",
    "BoundSet",
    "RateTriple",
    "RegionError",
    "ScanPoint",
    "THEOREMS",
    "eval_bounds",
    "extend_to_full_joint",
    "membership",
    "region_scan",
    "remark_caps",
    "secrecy_capacity",
    "secrecy_capacity_search",
    "state_cancelling_aux",
    "theorem_mode",
    # codec
    "BlockRecord",
    "Codebook",
    "CodebookCounts",
    "CodeParams",
    "DecodingError",
    "EncodeResult",
    "EncodingError",
    "FeedbackSession",
    "ParameterError",
    "build_codebook",
    "causal_encode",
    "decode_rx1",
    "decode_rx2",
    "decrypt",
    "empirical_joint",
    "encrypt",
    "gp_encode",
    "is_typical",
    "key_from_feedback",
    "one_time_pad_joint",
    "population",
    "run_block_markov",
    "synthesize_x",
    "transmit",
    # sim
    "SimReport",
    "conditional_output_entropy_rate",
    "exact_equivocation",
    "run_trials",
]
