#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "kivafair/causal.hpp"
#include "kivafair/data_model.hpp"
#include "kivafair/linear_models.hpp"

namespace kivafair {

nlohmann::json to_json(const SpikeSlabHyper& h);
/// Missing keys keep their defaults; unknown keys throw kInvalidArgument.
SpikeSlabHyper hyper_from_json(const nlohmann::json& j, SpikeSlabHyper base = {});

/// One row per retained draw: theta, tau2, sigma2, beta[..], pi[..].
/// Doubles use shortest round-trip formatting, so reading back is exact.
void write_draws_csv(const PosteriorDraws& draws, const std::filesystem::path& path);
/// Hyperparameters are not stored in the CSV; they come back as defaults.
PosteriorDraws read_draws_csv(const std::filesystem::path& path);

/// Posterior means, inclusion probabilities and 95% credible intervals.
nlohmann::json posterior_summary(const PosteriorDraws& draws);

nlohmann::json to_json(const AteResult& r);
nlohmann::json to_json(const SectorStudyResult& r);

/// Header: sector, method, estimate, se, ci_low, ci_high.
std::string ate_csv(const std::vector<AteResult>& rows);

std::string coefficient_csv(const OlsFit& fit);
nlohmann::json to_json(const OlsFit& fit);

/// Writes `text` to `path`, creating parent directories. Throws kIoError.
void write_text(const std::filesystem::path& path, const std::string& text);
/// Two-space indented JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace kivafair
