#include "precopt/io.hpp"

namespace precopt {

namespace {

const char* mi_method_name(MiMethod m) {
  switch (m) {
    case MiMethod::gaussian_closed_form: return "gaussian-closed-form";
    case MiMethod::low_snr_closed_form: return "low-snr-closed-form";
    case MiMethod::discrete_mc: return "monte-carlo";
    case MiMethod::discrete_quadrature: return "gauss-hermite";
  }
  return "unknown";
}

}  // namespace

Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array())
    throw ConfigError("expected a nested array of matrix rows");
  const int r = static_cast<int>(rows.size());
  const int c = static_cast<int>(rows[0].size());
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i) {
    if (static_cast<int>(rows[i].size()) != c) throw ConfigError("ragged matrix rows");
    for (int j = 0; j < c; ++j) m(i, j) = rows[i][j].get<double>();
  }
  return m;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& arr) {
  if (!arr.is_array()) throw ConfigError("expected an array");
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<int>(i)) = arr[i].get<double>();
  return v;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Channel load_channel(const nlohmann::json& j) {
  if (j.contains("H")) return Channel::from_matrix(matrix_from_json(j.at("H")));
  if (j.contains("eigenvalues_sq"))
    return Channel::from_eigenvalues(vector_from_json(j.at("eigenvalues_sq")));
  throw ConfigError("channel: expected \"H\" or \"eigenvalues_sq\"");
}

Constellation load_constellation(const nlohmann::json& j) {
  if (j.contains("builtin"))
    return make_constellation(j.at("builtin").get<std::string>(), j.value("dims", 1));
  if (!j.contains("points")) throw ConfigError("constellation: expected \"builtin\" or \"points\"");
  // points arrive one row per constellation point
  const Eigen::MatrixXd pts = matrix_from_json(j.at("points")).transpose();
  Eigen::VectorXd priors;
  if (j.contains("priors")) {
    priors = vector_from_json(j.at("priors"));
  } else {
    priors = Eigen::VectorXd::Constant(pts.cols(), 1.0 / pts.cols());
  }
  if (j.value("normalized", false)) {
    Constellation c{pts, priors};
    const Eigen::VectorXd mean = c.points * c.priors;
    const Eigen::MatrixXd cov = c.points * c.priors.asDiagonal() * c.points.transpose();
    if (mean.lpNorm<Eigen::Infinity>() > 1e-10 ||
        (cov - Eigen::MatrixXd::Identity(c.dims(), c.dims())).lpNorm<Eigen::Infinity>() > 1e-8)
      throw ConfigError("constellation: asserted normalized but moments are off");
    return c;
  }
  return normalize(pts, priors);
}

MinNormInstance load_minnorm_instance(const nlohmann::json& j) {
  if (!j.contains("weights")) throw ConfigError("instance: expected \"weights\"");
  return MinNormInstance{matrix_from_json(j.at("weights")).transpose()};
}

DistanceInstance load_distance_instance(const nlohmann::json& j) {
  if (!j.contains("diffs") || !j.contains("H"))
    throw ConfigError("instance: expected \"diffs\" and \"H\"");
  DistanceInstance inst;
  inst.diffs = unstructured_set(matrix_from_json(j.at("diffs")).transpose());
  inst.channel = Channel::from_matrix(matrix_from_json(j.at("H")));
  inst.rho = j.value("rho", 1.0);
  inst.d = j.value("d", 1.0);
  return inst;
}

nlohmann::json solution_to_json(const PrecoderSolution& sol) {
  nlohmann::json out;
  out["precoder"]["matrix"] = matrix_to_json(sol.precoder.p);
  out["precoder"]["u"] = matrix_to_json(sol.precoder.svd.u);
  out["precoder"]["sigma"] = vector_to_json(sol.precoder.svd.singvals);
  out["precoder"]["v"] = matrix_to_json(sol.precoder.svd.v);
  out["precoder"]["power"] = sol.precoder.power;
  out["mi"]["nats"] = sol.mi.nats;
  out["mi"]["bits"] = sol.mi.bits();
  out["mi"]["stderr"] = sol.mi.stderr_;
  out["mi"]["method"] = mi_method_name(sol.mi.method);
  out["kkt"]["eta"] = sol.kkt.eta;
  out["kkt"]["active"] = sol.kkt.active;
  out["kkt"]["residuals"] = vector_to_json(sol.kkt.residuals);
  out["kkt"]["iterations"] = sol.kkt.iterations;
  out["kkt"]["converged"] = sol.kkt.converged;
  out["vp_trace"] = sol.vp_trace;
  return out;
}

nlohmann::json distance_result_to_json(const DistanceResult& r) {
  nlohmann::json out;
  out["value"] = r.value;
  out["argmin_diff"] = vector_to_json(r.argmin_diff);
  if (r.precoder) out["precoder"] = matrix_to_json(r.precoder->p);
  if (r.power) out["power"] = *r.power;
  out["heuristic"] = r.heuristic;
  return out;
}

}  // namespace precopt
