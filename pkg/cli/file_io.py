"""
Persistence of fan data, mode tables, reconstructed tensor grids and reports. Every file is written to a temporary
path first and then renamed, so that readers never see partial files.
"""
import csv
import io
import json
import logging
import os
import struct

import numpy as np
import pandas as pd

from geometry.domain import Domain
from tensoray_errors import FileFormatError
from transport.fan import FanData

logger = logging.getLogger(__name__)

# First line of the fan CSV files
FAN_CSV_SIGNATURE = "# tensoray fan data"
# Magic bytes and version of the binary fan files
FAN_BINARY_MAGIC = b"TRAYFAN\x00"
FAN_BINARY_VERSION = 1
# Header after the magic: version, M, K (uint32), radius (float64), metadata length (uint32), little-endian
FAN_BINARY_HEADER = struct.Struct("<IIIdI")
# Fixed 17 significant digits round trip every float64
FLOAT_FORMAT = "%.17g"


def atomic_write(file_path, write_fn, binary=False):
    """
    Write a file through write_fn(file_object) into a temporary file renamed to file_path once complete
    """
    folder = os.path.dirname(os.path.abspath(file_path))
    os.makedirs(folder, exist_ok=True)
    tmp_path = f"{file_path}.tmp"
    try:
        if binary:
            with open(tmp_path, "wb") as f:
                write_fn(f)
        else:
            with io.open(tmp_path, "w", encoding="utf8", newline="") as f:
                write_fn(f)
        os.replace(tmp_path, file_path)
        logger.debug(f"Wrote {file_path}")
    finally:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
    return file_path


def write_json(data, file_path):
    return atomic_write(file_path, lambda f: json.dump(data, f, indent=2, sort_keys=True, default=str))


def write_text(text, file_path):
    return atomic_write(file_path, lambda f: f.write(text))


def _fan_metadata(fan, metadata):
    out = dict(fan.header())
    out.update(fan.metadata)
    out.update(metadata or dict())
    return out


def write_fan_csv(fan, file_path, metadata=None):
    """
    Fan data as CSV: the signature line, one '# {json}' metadata line, the header row and one row
    i, j, s_i, phi_j, value per (boundary node, direction node)
    """
    meta = _fan_metadata(fan, metadata)

    def write(f):
        f.write(f"{FAN_CSV_SIGNATURE}\n")
        f.write(f"# {json.dumps(meta, sort_keys=True, default=str)}\n")
        writer = csv.writer(f, delimiter=",", lineterminator="\n")
        writer.writerow(["i", "j", "s", "phi", "value"])
        s, phi = fan.domain.s, fan.phi
        for i in range(fan.M):
            for j in range(fan.K):
                writer.writerow([i, j, FLOAT_FORMAT % s[i], FLOAT_FORMAT % phi[j], FLOAT_FORMAT % fan.values[i, j]])

    return atomic_write(file_path, write)


def read_fan_csv(file_path, tangency_eps=None):
    """
    Parse a fan CSV file; malformed content raises FileFormatError with the offending line number
    :return: FanData
    """
    with io.open(file_path, "r", encoding="utf8", newline="") as f:
        lines = f.read().splitlines()
    if not lines or lines[0].strip() != FAN_CSV_SIGNATURE:
        raise FileFormatError(f"Attention, {file_path} is not a fan CSV file.", 1)
    if len(lines) < 3 or not lines[1].startswith("# "):
        raise FileFormatError(f"Attention, missing metadata line in {file_path}.", 2)
    try:
        meta = json.loads(lines[1][2:])
        m, k, radius = int(meta["M"]), int(meta["K"]), float(meta["radius"])
    except (ValueError, KeyError, TypeError) as e:
        raise FileFormatError(f"Attention, malformed metadata in {file_path}: {e}", 2)
    if [c.strip() for c in lines[2].split(",")] != ["i", "j", "s", "phi", "value"]:
        raise FileFormatError(f"Attention, unexpected header row in {file_path}.", 3)

    values = np.full((m, k), np.nan)
    for offset, row in enumerate(csv.reader(lines[3:])):
        line_number = offset + 4
        if not row:
            continue
        if len(row) != 5:
            raise FileFormatError(f"Attention, expected 5 fields in {file_path}, got {len(row)}.", line_number)
        try:
            i, j, value = int(row[0]), int(row[1]), float(row[4])
        except ValueError as e:
            raise FileFormatError(f"Attention, cannot parse a row of {file_path}: {e}", line_number)
        if not (0 <= i < m and 0 <= j < k):
            raise FileFormatError(f"Attention, node index ({i}, {j}) out of range in {file_path}.", line_number)
        values[i, j] = value
    if np.any(np.isnan(values)):
        raise FileFormatError(f"Attention, {file_path} does not cover the {m} x {k} grid.", len(lines))
    return _fan_from(values, meta, tangency_eps)


def _fan_from(values, meta, tangency_eps):
    kwargs = dict() if tangency_eps is None else {"tangency_eps": tangency_eps}
    domain = Domain(radius=float(meta["radius"]), boundary_nodes=int(meta["M"]), **kwargs)
    extra = {key: value for key, value in meta.items() if key not in ("M", "K", "radius", "attenuation")}
    return FanData(values, domain, attenuation_tag=meta.get("attenuation", "none"), metadata=extra)


def write_fan_binary(fan, file_path, metadata=None):
    """
    Fan data as a little-endian binary file: magic, versioned header, JSON metadata, then M x K float64 values
    """
    meta_bytes = json.dumps(_fan_metadata(fan, metadata), sort_keys=True, default=str).encode("utf-8")

    def write(f):
        f.write(FAN_BINARY_MAGIC)
        f.write(FAN_BINARY_HEADER.pack(FAN_BINARY_VERSION, fan.M, fan.K, fan.domain.radius, len(meta_bytes)))
        f.write(meta_bytes)
        f.write(np.ascontiguousarray(fan.values, dtype="<f8").tobytes())

    return atomic_write(file_path, write, binary=True)


def read_fan_binary(file_path, tangency_eps=None):
    with open(file_path, "rb") as f:
        payload = f.read()
    start = len(FAN_BINARY_MAGIC)
    if payload[:start] != FAN_BINARY_MAGIC:
        raise FileFormatError(f"Attention, {file_path} is not a binary fan file.")
    if len(payload) < start + FAN_BINARY_HEADER.size:
        raise FileFormatError(f"Attention, truncated header in {file_path}.")
    version, m, k, radius, meta_len = FAN_BINARY_HEADER.unpack_from(payload, start)
    if version != FAN_BINARY_VERSION:
        raise FileFormatError(f"Attention, unsupported binary fan version {version} in {file_path}.")
    offset = start + FAN_BINARY_HEADER.size
    try:
        meta = json.loads(payload[offset:offset + meta_len].decode("utf-8"))
    except (UnicodeDecodeError, ValueError) as e:
        raise FileFormatError(f"Attention, malformed metadata in {file_path}: {e}")
    offset += meta_len
    if len(payload) - offset != 8 * m * k:
        raise FileFormatError(f"Attention, {file_path} holds {len(payload) - offset} value bytes, expected "
                              f"{8 * m * k}.")
    values = np.frombuffer(payload, dtype="<f8", count=m * k, offset=offset).reshape(m, k).astype(float)
    meta.update({"M": m, "K": k, "radius": radius})
    return _fan_from(values, meta, tangency_eps)


def read_fan(file_path, tangency_eps=None):
    """Read a fan file, the format being chosen by the extension (.csv or binary)"""
    logger.debug(f"Reading fan data from {file_path}")
    if file_path.lower().endswith(".csv"):
        return read_fan_csv(file_path, tangency_eps)
    return read_fan_binary(file_path, tangency_eps)


def write_modes_csv(ms, file_path):
    """Angular modes as rows i, n, re, im"""
    n = np.arange(-ms.truncation, ms.truncation + 1)
    i, nn = np.meshgrid(np.arange(ms.M), n, indexing="ij")
    df = pd.DataFrame({"i": i.ravel(), "n": nn.ravel(), "re": ms.coefficients.real.ravel(),
                       "im": ms.coefficients.imag.ravel()})
    return atomic_write(file_path, lambda f: df.to_csv(f, index=False, float_format=FLOAT_FORMAT))


def write_tensor_grid_csv(tensor, file_path):
    """Gridded tensor as rows x, y, f11, f12, f22 (x major)"""
    x, y = np.meshgrid(tensor.x_axis, tensor.y_axis, indexing="ij")
    df = pd.DataFrame({"x": x.ravel(), "y": y.ravel(), "f11": tensor.f11.ravel(), "f12": tensor.f12.ravel(),
                       "f22": tensor.f22.ravel()})
    return atomic_write(file_path, lambda f: df.to_csv(f, index=False, float_format=FLOAT_FORMAT))


def read_tensor_grid_csv(file_path):
    """Inverse of write_tensor_grid_csv: (x_axis, y_axis, f11, f12, f22)"""
    df = pd.read_csv(file_path)
    missing = {"x", "y", "f11", "f12", "f22"} - set(df.columns)
    if missing:
        raise FileFormatError(f"Attention, tensor grid {file_path} misses the columns {sorted(missing)}.", 1)
    x_axis, y_axis = np.unique(df["x"].to_numpy()), np.unique(df["y"].to_numpy())
    shape = (x_axis.size, y_axis.size)
    if len(df) != shape[0] * shape[1]:
        raise FileFormatError(f"Attention, tensor grid {file_path} is not a full Cartesian grid.")
    return (x_axis, y_axis) + tuple(df[c].to_numpy().reshape(shape) for c in ("f11", "f12", "f22"))


def write_gnuplot_script(grid_csv_name, file_path, title="F_psi"):
    """gnuplot script drawing the heat maps of the three components of a tensor grid CSV"""
    lines = ["set datafile separator ','", "set view map", "set size ratio -1", "set palette rgbformulae 33,13,10",
             "set terminal pngcairo size 1500,500", f"set output '{os.path.splitext(grid_csv_name)[0]}.png'",
             "set multiplot layout 1,3"]
    for column, name in ((3, "f11"), (4, "f12"), (5, "f22")):
        lines.append(f"set title '{title} {name}'")
        lines.append(f"splot '{grid_csv_name}' every ::1 using 1:2:{column} with image notitle")
    lines.append("unset multiplot")
    return write_text("\n".join(lines) + "\n", file_path)
