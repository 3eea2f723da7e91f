# Copyright 2026 The qpinn-lab Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Figures from the CSV/JSON files written by the qpinn tool."""

from plotkit.render import KINDS, FigureRequest, build_figure, render
from plotkit.tables import SchemaError, Table, read_table

__all__ = ["KINDS", "FigureRequest", "SchemaError", "Table", "build_figure", "read_table", "render"]
