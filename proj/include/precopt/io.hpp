#pragma once

#include <string>

#include <json.hpp>

#include "precopt/channel.hpp"
#include "precopt/infomeasures.hpp"
#include "precopt/mindist.hpp"
#include "precopt/precoder_opt.hpp"

namespace precopt {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows);
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::VectorXd vector_from_json(const nlohmann::json& arr);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);

/// {"H": [[row-major rows]]} or {"eigenvalues_sq": [...]}.
Channel load_channel(const nlohmann::json& j);

// {"builtin": name, "dims": d} or {"points": [[...]], "priors": [...]};
// points are normalized on load unless "normalized": true asserts they
// already are (then validated).
Constellation load_constellation(const nlohmann::json& j);

/// {"weights": [[...]]}, one row per weight vector.
MinNormInstance load_minnorm_instance(const nlohmann::json& j);

/// {"diffs": [[...]], "H": [[...]], "rho": r} (row per difference vector).
struct DistanceInstance {
  DifferenceSet diffs;
  Channel channel;
  double rho = 1.0;
  double d = 1.0;
};
DistanceInstance load_distance_instance(const nlohmann::json& j);

nlohmann::json solution_to_json(const PrecoderSolution& sol);
nlohmann::json distance_result_to_json(const DistanceResult& r);

}  // namespace precopt
