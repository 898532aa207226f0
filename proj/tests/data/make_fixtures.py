# Copyright 2026 The reggap Authors
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

"""Regenerates the tiny ONNX models used by the backbone and parser tests.

Weights follow closed-form formulas so the C++ tests can recompute the
expected outputs without reading the model files.

    python3 make_fixtures.py
"""

import pathlib

import torch
from torch import nn

HERE = pathlib.Path(__file__).resolve().parent


def formula_conv(in_ch: int, out_ch: int) -> nn.Conv2d:
    conv = nn.Conv2d(in_ch, out_ch, kernel_size=1, bias=True)
    with torch.no_grad():
        for o in range(out_ch):
            for i in range(in_ch):
                conv.weight[o, i, 0, 0] = ((o % 13) - 6) / 6.0 * (i + 1) / 3.0
            conv.bias[o] = (o % 5) * 0.1
    return conv


class PooledProjection(nn.Module):
    """Average pool followed by a 1x1 convolution."""

    def __init__(self, kernel: int, out_ch: int):
        super().__init__()
        self.pool = nn.AvgPool2d(kernel_size=kernel, stride=kernel)
        self.proj = formula_conv(3, out_ch)

    def forward(self, x):
        return self.proj(self.pool(x))


class ParserStub(nn.Module):
    """19-class logits: nose where the normalised red channel is positive,
    skin elsewhere; every other class is strongly suppressed."""

    def __init__(self):
        super().__init__()
        self.conv = nn.Conv2d(3, 19, kernel_size=1, bias=True)
        with torch.no_grad():
            self.conv.weight.zero_()
            self.conv.bias.fill_(-100.0)
            self.conv.bias[1] = 0.0
            self.conv.bias[10] = 0.0
            self.conv.weight[10, 0, 0, 0] = 1.0
            self.conv.weight[1, 0, 0, 0] = -1.0

    def forward(self, x):
        return self.conv(x)


def export(model: nn.Module, size: int, name: str) -> None:
    model.eval()
    dummy = torch.zeros(1, 3, size, size)
    torch.onnx.export(model, dummy, HERE / name, opset_version=11, dynamo=False,
                      input_names=["input"], output_names=["features"])


def main() -> None:
    export(PooledProjection(53, 1792), 160, "facenet_stub.onnx")
    export(PooledProjection(16, 512), 224, "vggface_stub.onnx")
    export(PooledProjection(40, 1792), 160, "wrong_shape_stub.onnx")
    export(ParserStub(), 512, "parser_stub.onnx")


if __name__ == "__main__":
    main()
