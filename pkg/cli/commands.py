"""
Commands of the command line front end. Each command returns its exit code together with what it produced; the files
it writes echo the run configuration in their metadata.
"""
import logging
import os

import numpy as np
from tabulate import tabulate

from aanalytic.operators import range_residual
from attenuation.identities import mode_recursion_residuals, transport_residual
from attenuation.pack import load_or_build_pack
from cli import file_io
from fields.phantoms import ATTENUATION_KINDS, attenuation_from_descriptor, tensor_from_descriptor
from geometry.domain import Domain
from modes.sequences import angular_modes, build_even, build_odd, gtilde_seq, odd_extension
from reconstruct.pipeline import (AttenuatedModes, make_grid, psi_default_att, reconstruct_att, reconstruct_free,
                                  roundtrip)
from reconstruct.psi import PSI_KINDS, perturbed_psi, psi_free_from_rule
from tensoray_errors import ConfigError, FileFormatError, TensorayError
from transport.fan import make_fan

logger = logging.getLogger(__name__)


class EXIT_CODES:
    OK = 0
    RANGE_FAIL = 1
    CONFIG = 2
    IO = 3


class COMMANDS:
    FORWARD = "forward"
    RANGE_TEST = "range-test"
    RECONSTRUCT = "reconstruct"
    ROUNDTRIP = "roundtrip"
    VERIFY_H = "verify-h"


# Attenuation used by verify-h when the configuration has none
VERIFY_H_DEFAULT_ATTENUATION = {"kind": ATTENUATION_KINDS.GAUSSIAN, "base": 0.2, "amplitude": 0.3, "sigma": 0.5,
                                "center": [0.1, -0.1]}


def fan_folder(config):
    return os.path.join(config.output_dir, "FAN_DATA")


def reconstruction_folder(config):
    return os.path.join(config.output_dir, "RECONSTRUCTION")


def default_fan_path(config):
    extension = "csv" if config.fan_format == "csv" else "bin"
    return os.path.join(fan_folder(config), f"fan.{extension}")


def build_domain(config):
    return Domain(radius=config.radius, boundary_nodes=config.M, tangency_eps=config.tangency_eps)


def build_attenuation(config, domain, descriptor=None):
    return attenuation_from_descriptor(descriptor or config.attenuation, domain, config.cutoff_width_abs)


def build_pack(config, attenuation, domain, grid, angle_nodes=None):
    return load_or_build_pack(attenuation, grid, domain, angle_nodes or config.K, config.N,
                              radon_step=config.radon_step_abs, padding=config.padding, tol_mass=config.tol_mass,
                              cache_folder=os.path.join(config.output_dir, "ATTENUATION_PACKS"),
                              threads=config.threads, show_progress=config.show_progress)


def report_table(rows, title, file_path, config):
    """Print a tabulate table and store it, preceded by the configuration, to a text report"""
    table = tabulate(rows, headers=["Quantity", "Value", "Tolerance", "Pass"])
    print(f"\n{title}:")
    print(table)
    text = "".join(f"{k}: {v}\n" for k, v in config.echo().items()) + "\n\n" + table + "\n"
    file_io.write_text(text, file_path)
    return table


def _row(name, value, tol):
    return [name, f"{value:.3e}", f"{tol:.1e}" if tol is not None else "-",
            ("yes" if value < tol else "NO") if tol is not None else "-"]


def forward_fan(config, field=None, attenuation=None):
    """Fan data of the configured phantom (optionally perturbed by seeded Gaussian noise on the outflow nodes)"""
    domain = build_domain(config)
    field = field or tensor_from_descriptor(config.phantom, domain)
    if attenuation is None and config.attenuation is not None:
        attenuation = build_attenuation(config, domain)
    fan = make_fan(field, attenuation, domain, config.K, h_ray=config.h_ray_abs, threads=config.threads,
                   show_progress=config.show_progress)
    if config.noise_amplitude > 0:
        rng = np.random.default_rng(config.seed)
        outflow = domain.ray_classes(config.K) > 0
        noise = config.noise_amplitude * rng.standard_normal(fan.values.shape) * outflow
        fan = fan.with_values(fan.values + noise, check=True)
    fan.metadata["config"] = config.echo()
    return fan


def cmd_forward(config):
    """
    Write the fan data of the configured phantom as binary and CSV files, with a metadata JSON
    :return: (exit code, dictionary of written paths)
    """
    fan = forward_fan(config)
    folder = fan_folder(config)
    paths = {"binary": file_io.write_fan_binary(fan, os.path.join(folder, "fan.bin")),
             "csv": file_io.write_fan_csv(fan, os.path.join(folder, "fan.csv")),
             "metadata": file_io.write_json({**fan.header(), **fan.metadata}, os.path.join(folder, "fan.json"))}
    print(f"Fan data ({fan.M} x {fan.K}) stored to {folder}")
    return EXIT_CODES.OK, paths


def range_report(fan, config):
    """
    Range-test residuals of a fan. With an attenuation configured the test is passed on the residuals of g_h and the
    compatibility condition, the plain residuals being reported without tolerance.
    :return: (report, tolerances, passed)
    """
    domain = fan.domain
    ms = angular_modes(fan, config.N)
    report = {"g_even": range_residual(build_even(ms), domain)["sup"],
              "g_odd": range_residual(build_odd(ms), domain)["sup"],
              "g_tilde_odd": range_residual(gtilde_seq(fan, config.N), domain)["sup"]}
    tilde_modes = angular_modes(odd_extension(fan), config.N)
    report["g_tilde_even_modes"] = float(max(np.max(np.abs(tilde_modes.mode(n)))
                                             for n in range(-config.N, config.N + 1) if n % 2 == 0))
    tolerances = {"g_even": config.tol_range, "g_odd": config.tol_range, "g_tilde_odd": config.tol_range,
                  "g_tilde_even_modes": None}
    if config.attenuation is not None:
        # attenuated data only obey the range conditions of g_h and the compatibility condition
        tolerances = {key: None for key in tolerances}
        attenuation = build_attenuation(config, domain)
        grid = make_grid(domain, config.grid_step_abs, config.margin_abs)
        pack = build_pack(config, attenuation, domain, grid, fan.K)
        am = AttenuatedModes(fan, pack, config.N, config.tol_range)
        report["g_h_even"] = am.range_residuals[am.g_h_even.role]
        report["g_h_odd"] = am.range_residuals[am.g_h_odd.role]
        report["compat"] = float(np.max(np.abs(am.compat_residual())))
        tolerances.update({"g_h_even": config.tol_range, "g_h_odd": config.tol_range, "compat": config.tol_compat})
    passed = all(report[k] < tol for k, tol in tolerances.items() if tol is not None)
    logger.info(f"Range test {'passed' if passed else 'failed'}: {report}")
    return report, tolerances, passed


def cmd_range_test(config, fan_path=None):
    """
    Range conditions of the data stored in fan_path
    :return: (exit code 0 if every residual is below its tolerance and 1 otherwise, report dictionary)
    """
    fan_path = fan_path or default_fan_path(config)
    fan = file_io.read_fan(fan_path, config.tangency_eps)
    report, tolerances, passed = range_report(fan, config)
    folder = reconstruction_folder(config)
    file_io.write_json({"fan": fan_path, "residuals": report, "tolerances": tolerances, "passed": passed,
                        "config": config.echo()}, os.path.join(folder, "range_test.json"))
    report_table([_row(k, v, tolerances[k]) for k, v in report.items()], "RANGE TEST",
                 os.path.join(folder, "range_test.txt"), config)
    return (EXIT_CODES.OK if passed else EXIT_CODES.RANGE_FAIL), report


def reconstruct_fan(fan, config, attenuation=None, psi_perturbation=None):
    """Run the pipeline matching the configuration on a fan; returns (ReconstructionResult, pack or None)"""
    domain = fan.domain
    grid = make_grid(domain, config.grid_step_abs, config.margin_abs)
    amplitude = config.psi_perturbation if psi_perturbation is None else psi_perturbation
    if config.attenuation is None and attenuation is None:
        psi = psi_free_from_rule(config.psi_rule or PSI_KINDS.POISSON_DEFAULT, angular_modes(fan, config.N), domain,
                                 grid)
        if amplitude:
            psi = perturbed_psi(psi, amplitude)
        return reconstruct_free(fan, psi, config.N, grid, config.tol_range), None
    if config.psi_rule not in (None, PSI_KINDS.RADIAL_BLEND):
        raise ConfigError(f"Attention, the attenuated reconstruction only supports the {PSI_KINDS.RADIAL_BLEND} gauge, "
                          f"got the psi rule {config.psi_rule}.")
    attenuation = attenuation or build_attenuation(config, domain)
    pack = build_pack(config, attenuation, domain, grid, fan.K)
    am = AttenuatedModes(fan, pack, config.N, config.tol_range)
    psi = psi_default_att(fan, pack, attenuated_modes=am)
    if amplitude:
        psi = perturbed_psi(psi, amplitude)
    result = reconstruct_att(fan, pack, psi, config.N, config.min_a, config.tol_range, config.tol_compat)
    return result, pack


def cmd_reconstruct(config, fan_path=None):
    """
    Reconstruct F_psi from the data stored in fan_path; writes the tensor grid CSV, the data modes, the diagnostics
    JSON and a gnuplot script
    :return: (exit code, ReconstructionResult, dictionary of written paths)
    """
    fan_path = fan_path or default_fan_path(config)
    fan = file_io.read_fan(fan_path, config.tangency_eps)
    result, _ = reconstruct_fan(fan, config)
    folder = reconstruction_folder(config)
    paths = {"tensor": file_io.write_tensor_grid_csv(result.tensor, os.path.join(folder, "tensor_grid.csv")),
             "modes": file_io.write_modes_csv(angular_modes(fan, config.N), os.path.join(folder, "data_modes.csv")),
             "diagnostics": file_io.write_json({"fan": fan_path, "diagnostics": result.diagnostics,
                                                "config": config.echo()}, os.path.join(folder, "diagnostics.json")),
             "gnuplot": file_io.write_gnuplot_script("tensor_grid.csv", os.path.join(folder, "tensor_grid.gp"))}
    print(f"Reconstructed tensor stored to {paths['tensor']}")
    return EXIT_CODES.OK, result, paths


def cmd_roundtrip(config):
    """
    Forward data of the configured phantom, reconstruction, forward data of the reconstruction
    :return: (exit code 0 if the relative data error is below the tolerance of the case and 1 otherwise, report)
    """
    domain = build_domain(config)
    attenuation = build_attenuation(config, domain) if config.attenuation is not None else None
    fan = forward_fan(config, attenuation=attenuation)
    result, _ = reconstruct_fan(fan, config, attenuation)
    _, error = roundtrip(result, fan, attenuation, h_ray=config.h_ray_abs, threads=config.threads,
                         show_progress=config.show_progress)
    tol = config.tol_roundtrip_free if attenuation is None else config.tol_roundtrip_attenuated
    report = {"roundtrip_error": error, "tolerance": tol, "diagnostics": result.diagnostics}
    folder = reconstruction_folder(config)
    file_io.write_json({**report, "config": config.echo()}, os.path.join(folder, "roundtrip.json"))
    report_table([_row("roundtrip relative error", error, tol)], "ROUNDTRIP", os.path.join(folder, "roundtrip.txt"),
                 config)
    return (EXIT_CODES.OK if error < tol else EXIT_CODES.RANGE_FAIL), report


def verify_h_report(config, attenuation, domain, grid, pack, sample_points=16):
    """Identity suite of the integrating factor: (report, tolerances)"""
    rng = np.random.default_rng(config.seed)
    r = (domain.radius - grid.margin) * np.sqrt(rng.uniform(0.0, 1.0, sample_points))
    points = r * np.exp(2j * np.pi * rng.uniform(0.0, 1.0, sample_points))
    report = {"transport": transport_residual(attenuation, points, min(config.K, 32), config.radon_step_abs,
                                              config.padding),
              "negative_modes": pack.diagnostics["negative_mode_max"],
              "convolution": pack.diagnostics["convolution_gap"],
              "product": pack.diagnostics["product_gap"],
              "discarded_mass": max(pack.diagnostics["discarded_mass_alpha"], pack.diagnostics["discarded_mass_beta"])}
    recursions = mode_recursion_residuals(pack)
    report.update({f"recursion_{k}": v for k, v in recursions.items()})
    tolerances = {"transport": config.tol_transport, "negative_modes": config.tol_neg, "convolution": config.tol_conv,
                  "product": config.tol_product, "discarded_mass": config.tol_mass}
    tolerances.update({f"recursion_{k}": config.tol_recursion for k in recursions})
    return report, tolerances


def cmd_verify_h(config):
    """
    Standalone identity suite of the attenuation module on the configured attenuation (a Gaussian one by default)
    :return: (exit code 0 if every identity holds within its tolerance and 1 otherwise, report)
    """
    domain = build_domain(config)
    attenuation = build_attenuation(config, domain, config.attenuation or VERIFY_H_DEFAULT_ATTENUATION)
    grid = make_grid(domain, config.grid_step_abs, config.margin_abs)
    pack = build_pack(config, attenuation, domain, grid)
    report, tolerances = verify_h_report(config, attenuation, domain, grid, pack)
    passed = all(report[k] < tol for k, tol in tolerances.items())
    folder = reconstruction_folder(config)
    file_io.write_json({"identities": report, "tolerances": tolerances, "passed": passed, "config": config.echo()},
                       os.path.join(folder, "verify_h.json"))
    report_table([_row(k, v, tolerances[k]) for k, v in report.items()], "INTEGRATING FACTOR IDENTITIES",
                 os.path.join(folder, "verify_h.txt"), config)
    return (EXIT_CODES.OK if passed else EXIT_CODES.RANGE_FAIL), report


def run_command(command, config, fan_path=None):
    """
    Dispatch a command and map the error families to exit codes
    :return: exit code
    """
    try:
        if command == COMMANDS.FORWARD:
            return cmd_forward(config)[0]
        elif command == COMMANDS.RANGE_TEST:
            return cmd_range_test(config, fan_path)[0]
        elif command == COMMANDS.RECONSTRUCT:
            return cmd_reconstruct(config, fan_path)[0]
        elif command == COMMANDS.ROUNDTRIP:
            return cmd_roundtrip(config)[0]
        elif command == COMMANDS.VERIFY_H:
            return cmd_verify_h(config)[0]
        print(f"Attention, unknown command: {command}")
        return EXIT_CODES.CONFIG
    except (FileFormatError, OSError) as e:
        print(f"I/O ERROR: {e}")
        return EXIT_CODES.IO
    except TensorayError as e:
        print(f"CONFIGURATION ERROR: {e}")
        return EXIT_CODES.CONFIG
