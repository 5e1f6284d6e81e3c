#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "pseudopost/engine.hpp"
#include "pseudopost/experiments.hpp"
#include "pseudopost/population.hpp"
#include "pseudopost/reference_mcmc.hpp"

namespace pseudopost {

// Shortest exact decimal representation of a double (round-trips bit-exactly).
std::string format_double(double value);

// Dataset CSV: header x1,...,xd,y, one observation per row.
void write_dataset_csv(const Dataset& data, const std::string& path);
Dataset read_dataset_csv(const std::string& path);

nlohmann::json fit_to_json(const SurrogateFit& fit);
SurrogateFit fit_from_json(const nlohmann::json& j);
void write_fit_json(const SurrogateFit& fit, const std::string& path);
SurrogateFit read_fit_json(const std::string& path);

nlohmann::json particles_to_json(const WeightedParticleSet& ps);
WeightedParticleSet particles_from_json(const nlohmann::json& j);
void write_particles_json(const WeightedParticleSet& ps, const std::string& path);
// Particle CSV: theta_1..theta_p,R,log_w,w.
void write_particles_csv(const WeightedParticleSet& ps, const std::string& path);

// Chain CSV: iter,theta_1..theta_p,log_target,accepted.
void write_chain_csv(const Chain& chain, const std::string& path);
nlohmann::json chain_summary_to_json(const ChainSummary& summary, double acceptance_rate);

// Scan CSV: theta_1..theta_p,mu_hat,mu_sq,member.
void write_scan_csv(const IdentifiedSetScan& scan, const std::string& path);

nlohmann::json report_to_json(const ExperimentReport& report);
// Writes <out_dir>/<name>_report.json plus one CSV per table.
void write_report(const ExperimentReport& report, const std::string& out_dir);

// Parsed "model config" document: the simulator plus the generation settings
// that accompany it.
struct ParsedModelConfig {
  std::unique_ptr<SimulatorModel> model;
  Vector theta_true;
  Eigen::Index n_obs = 0;
  std::uint64_t seed = 0;
};

ParsedModelConfig model_from_json(const nlohmann::json& j);
ParsedModelConfig read_model_config(const std::string& path);

CalibrationConfig calibration_from_json(const nlohmann::json& j);
CalibrationConfig read_calibration_config(const std::string& path);

MhConfig mh_from_json(const nlohmann::json& j);
// Returns the config plus whether a pilot tuning phase was requested.
struct ParsedMhConfig {
  MhConfig config;
  bool tune = false;
};
ParsedMhConfig read_mh_config(const std::string& path);

nlohmann::json read_json_file(const std::string& path);
void write_text_atomic(const std::string& text, const std::string& path);

// 64-bit FNV-1a, stable across runs and platforms.
std::uint64_t fnv1a64(const std::string& bytes);

// Run record written next to every CLI artifact.
struct RunManifest {
  std::string command;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> artifacts;
  double wall_clock_seconds = 0.0;
  std::string library_version;
};

void write_manifest(const RunManifest& manifest, const std::string& path);

inline constexpr const char* kLibraryVersion = "0.1.0";

}  // namespace pseudopost
