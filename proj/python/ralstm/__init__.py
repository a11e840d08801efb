# Copyright 2026 the ralstm authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Retrieval-augmented LSTM toolkit.

Exact nearest-neighbor retrieval over training representations, with the
retrieved example's target injected into a caption decoder or sentiment
classifier through the LSTM initial memory state and/or a two-way attention
fusion. The heavy lifting lives in the C++ core; this package exposes the
main operations with numpy arrays at the boundary.
"""

from ralstm._core import (
    CaptionModel,
    EmbeddingTable,
    ExampleStore,
    SentimentModel,
    ToolkitError,
    Vocab,
    accuracy,
    avg_embedding,
    bleu,
    f_score,
    load_features,
    norm_weighted_avg,
    plus_minus_encoding,
    run_cli,
    save_features,
    synth_generate,
    tokenize,
)

# Reserved token ids shared by every vocabulary.
PAD_ID = 0
BOS_ID = 1
EOS_ID = 2
UNK_ID = 3

__all__ = [
    "CaptionModel",
    "EmbeddingTable",
    "ExampleStore",
    "SentimentModel",
    "ToolkitError",
    "Vocab",
    "accuracy",
    "avg_embedding",
    "bleu",
    "f_score",
    "load_features",
    "norm_weighted_avg",
    "plus_minus_encoding",
    "run_cli",
    "save_features",
    "synth_generate",
    "tokenize",
    "PAD_ID",
    "BOS_ID",
    "EOS_ID",
    "UNK_ID",
]
