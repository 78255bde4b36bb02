#pragma once
// Experiment runners behind the command-line tool.  Each runner writes its
// output files under cfg.out and returns a process exit code (0 only when
// every requested computation succeeded).
//
// Output format invariants, shared by all runners:
//   * every file starts with a config-echo header ("# {json}" in CSV files,
//     a leading "config" field in JSON files) sufficient to re-run it,
//   * CSV: one header row naming the columns, comma separators, '\n' line
//     endings, floats rendered with 17 significant digits,
//   * no timestamps or other nondeterminism: rerunning with the same config
//     and seed reproduces every file byte for byte.
//
// Files written (under cfg.out):
//   rabi      rabi_trajectory.csv, rabi_summary.json  [, rabi_plot.gp]
//   protocol  fock:     fock_report.json, fock_distributions.csv [, fock_plot.gp]
//             bell:     bell_report.json, bell_populations.csv [, bell_plot.gp]
//             transfer: transfer_report.json, transfer_populations.csv
//                       [, transfer_plot.gp]
//   magic-eta magic_eta.json
//   scan      scan.csv  [, scan_plot.gp]
//
// The protocols prescribe their own pulse geometries, so cfg.mode.k / k_r /
// sideband are ignored by cmd_protocol; truncation, Lamb-Dicke parameters
// and the drive are taken from the config.

#include <string>

#include "ionsim/cli/config.hpp"

namespace ionsim::cli {

// Time trajectory of a driven resonant pair from a chosen basis state.
int cmd_rabi(const RunConfig& cfg, bool gnuplot = false);

// State-engineering protocols; `which` is "fock", "bell" or "transfer".
int cmd_protocol(const RunConfig& cfg, const std::string& which, bool gnuplot = false);

// Solve for Lamb-Dicke parameters with vanishing pair mismatch.
int cmd_magic_eta(const RunConfig& cfg);

// Tabulate pair observables over a parameter grid.
int cmd_scan(const RunConfig& cfg, bool gnuplot = false);

}  // namespace ionsim::cli
