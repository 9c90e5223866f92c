from .attractors import (
    AttractorSet, concentration_loss, discrimination_loss, kmeans_attractors, oracle_attractors,
    sds_masks, ses_masks,
)
from .config import (
    DAN_WEIGHTS, TDDAN_FREE_WEIGHTS, TDDAN_WEIGHTS, Framing, LossWeights, ModelConfig, TcnConfig,
    default_weights,
)
from .kmeans import kmeans
from .losses import recon_loss, si_sdr_tensor, upit_loss
from .models import DAN, TDDAN, ConvTasNet, build_model, tddan_loss
from .tcn import TCN, tcn_forward
