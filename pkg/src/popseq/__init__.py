"""Personalized-popularity-aware sequential recommendation toolkit."""

from .baselines import (MostPopularScorer, PersonalizedMostPopularScorer,
                        most_popular_scorer, personalized_most_popular_scorer)
from .events import (Catalog, EventLog, InteractionEvent, UserSequence,
                     emit_events, ingest_events, load_events, save_events,
                     user_sequences)
from .metrics import (EvaluationResult, MetricReport, bonferroni, build_report,
                      evaluate, ndcg_at_k, paired_t_test, rank_items)
from .model import (ModelConfig, ParameterSet, bce_loss, ce_loss, forward,
                    gbce_loss, gradient_check, init_parameters,
                    load_checkpoint, save_checkpoint)
from .pipeline import (DatasetSplit, assign_labels, global_temporal_split,
                       load_split, popularity_sample, save_split)
from .popularity import (PpsLogits, PpsMatrix, combine_scores, counts_vector,
                         pp_probability, pps_matrix, sigmoid_pps_logits,
                         smoothed_pp_probability, softmax_pps_logits)
from .synth import SynthConfig, generate
from .training import NeuralScorer, train

__version__ = "0.1.0"
