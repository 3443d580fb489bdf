"""Promise-theoretic attention: promise channels, gated layer chains, Q/K/V
ranking, a gamma(3,4) knowledge graph and a pseudo-periodic anomaly learner."""

from .attention import (AttentionQuery, DataBatch, KeyEntry, ProjectionWeights, RankedMatch,
                        Ranking, attend, project, scaled_scores, score_sets)
from .chain import (ChainResult, LayerSpec, chain_forward, convex_update, inverted_embedding,
                    layer_eval, softmax)
from .periodic import (DeviationReport, PeriodicModel, SlotStats, classify, combine, detect,
                       deviation, local_average, slot, update)
from .promises import (Agent, Assessment, Atom, Channel, Polarity, Promise, Verdict, World,
                       assess, bind_channel, body, promise_matrix, relay, relay_chain)
from .sst import SSTClass, SSTGraph, SSTLink, SSTNode, btc, evc, fractionate, trace_paths
from .store import Workspace, load_store, save_store

__version__ = "0.1.0"
