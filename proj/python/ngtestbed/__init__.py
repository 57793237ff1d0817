# Copyright 2026 The ngtestbed Authors.
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

"""Python access to the grid testbed core: xRSL, filters, NGP/1 frames,
the broker and the in-process demo task flow."""

from ._ngtestbed import (
    ParseError,
    canonical_filter,
    canonical_xrsl,
    decode,
    encode_request,
    filter_matches,
    match,
    parse_job,
    run_demo,
)

__all__ = [
    "ParseError",
    "canonical_filter",
    "canonical_xrsl",
    "decode",
    "encode_request",
    "filter_matches",
    "match",
    "parse_job",
    "run_demo",
]
