#include "hke/scale_function.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hke/error.hpp"

namespace hke {

namespace {

constexpr double kLogInftyJunction = 16.0;
constexpr double kExtensionExponent = 1.5;

// s^2 (log 1/s)^alpha is increasing only below e^{-alpha/2}; the junction is
// moved there when that is left of 1/2.
double log_zero_junction(double alpha) {
  return alpha > 0.0 ? std::min(0.5, std::exp(-alpha / 2.0)) : 0.5;
}

std::vector<double> split_numbers(const std::string& s, char sep) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::SpecInvalid, "cannot parse number '" + item + "'");
    }
  }
  return out;
}

void validate(const ScaleSpec& s) {
  if (!(s.r_min > 0.0) || !(s.r_max > s.r_min)) {
    throw Error(ErrorKind::SpecInvalid, "need 0 < r_min < r_max");
  }
  switch (s.kind) {
    case ScaleKind::Power:
      if (s.exponents.size() != 1 || !(s.exponents[0] > 0.0)) {
        throw Error(ErrorKind::SpecInvalid, "power kernel needs one exponent > 0");
      }
      break;
    case ScaleKind::PiecewisePower: {
      if (s.exponents.empty() || s.breaks.size() + 1 != s.exponents.size()) {
        throw Error(ErrorKind::SpecInvalid,
                    "piecewise kernel needs one more exponent than breakpoints");
      }
      for (double a : s.exponents) {
        if (!(a > 0.0)) throw Error(ErrorKind::SpecInvalid, "piecewise exponents must be > 0");
      }
      for (std::size_t i = 0; i < s.breaks.size(); ++i) {
        if (!(s.breaks[i] > 0.0) || (i > 0 && !(s.breaks[i] > s.breaks[i - 1]))) {
          throw Error(ErrorKind::SpecInvalid, "breakpoints must be positive and increasing");
        }
      }
      if (!s.coefficients.empty() && s.coefficients.size() != s.exponents.size()) {
        throw Error(ErrorKind::SpecInvalid, "one coefficient per piece expected");
      }
      for (double c : s.coefficients) {
        if (!(c > 0.0)) throw Error(ErrorKind::SpecInvalid, "coefficients must be > 0");
      }
      break;
    }
    case ScaleKind::LogCorrectedZero:
      if (!std::isfinite(s.log_power)) {
        throw Error(ErrorKind::SpecInvalid, "log power must be finite");
      }
      break;
    case ScaleKind::LogCorrectedInfty:
      // 2 + beta / log s >= 0 on s >= 16 keeps the log piece non-decreasing.
      if (!std::isfinite(s.log_power) || s.log_power < -2.0 * std::log(kLogInftyJunction)) {
        throw Error(ErrorKind::SpecInvalid, "loginf power must be >= -2 log 16");
      }
      break;
    case ScaleKind::Table:
      if (s.table_r.size() < 2 || s.table_r.size() != s.table_psi.size()) {
        throw Error(ErrorKind::SpecInvalid, "table kernel needs matching r/psi columns");
      }
      for (std::size_t i = 0; i < s.table_r.size(); ++i) {
        if (!(s.table_r[i] > 0.0) || !(s.table_psi[i] > 0.0)) {
          throw Error(ErrorKind::SpecInvalid, "table entries must be positive");
        }
      }
      break;
  }
}

}  // namespace

std::string to_string(ScaleKind kind) {
  switch (kind) {
    case ScaleKind::Power: return "power";
    case ScaleKind::PiecewisePower: return "piecewise_power";
    case ScaleKind::LogCorrectedZero: return "log_corrected_zero";
    case ScaleKind::LogCorrectedInfty: return "log_corrected_infty";
    case ScaleKind::Table: return "table";
  }
  return "unknown";
}

ScaleKind scale_kind_from_string(const std::string& s) {
  for (auto k : {ScaleKind::Power, ScaleKind::PiecewisePower, ScaleKind::LogCorrectedZero,
                 ScaleKind::LogCorrectedInfty, ScaleKind::Table}) {
    if (to_string(k) == s) return k;
  }
  throw Error(ErrorKind::SpecInvalid, "unknown kernel kind '" + s + "'");
}

ScaleSpec ScaleSpec::power(double alpha) {
  ScaleSpec s;
  s.kind = ScaleKind::Power;
  s.exponents = {alpha};
  return s;
}

ScaleSpec ScaleSpec::piecewise(std::vector<double> exponents, std::vector<double> breaks) {
  ScaleSpec s;
  s.kind = ScaleKind::PiecewisePower;
  s.exponents = std::move(exponents);
  s.breaks = std::move(breaks);
  return s;
}

ScaleSpec ScaleSpec::log_zero(double alpha) {
  ScaleSpec s;
  s.kind = ScaleKind::LogCorrectedZero;
  s.log_power = alpha;
  return s;
}

ScaleSpec ScaleSpec::log_infty(double beta) {
  ScaleSpec s;
  s.kind = ScaleKind::LogCorrectedInfty;
  s.log_power = beta;
  return s;
}

ScaleSpec ScaleSpec::table(std::vector<double> r, std::vector<double> psi) {
  ScaleSpec s;
  s.kind = ScaleKind::Table;
  s.r_min = r.empty() ? 1e-8 : r.front();
  s.r_max = r.empty() ? 1e8 : r.back();
  s.table_r = std::move(r);
  s.table_psi = std::move(psi);
  return s;
}

void to_json(nlohmann::json& j, const ScaleSpec& s) {
  nlohmann::json params = nlohmann::json::object();
  switch (s.kind) {
    case ScaleKind::Power: params["alpha"] = s.exponents.at(0); break;
    case ScaleKind::PiecewisePower:
      params["exponents"] = s.exponents;
      params["breaks"] = s.breaks;
      if (!s.coefficients.empty()) params["coefficients"] = s.coefficients;
      break;
    case ScaleKind::LogCorrectedZero: params["alpha"] = s.log_power; break;
    case ScaleKind::LogCorrectedInfty: params["beta"] = s.log_power; break;
    case ScaleKind::Table:
      params["r"] = s.table_r;
      params["psi"] = s.table_psi;
      break;
  }
  j = {{"kind", to_string(s.kind)}, {"params", params}, {"r_min", s.r_min}, {"r_max", s.r_max}};
}

void from_json(const nlohmann::json& j, ScaleSpec& s) {
  try {
    s = ScaleSpec{};
    s.kind = scale_kind_from_string(j.at("kind").get<std::string>());
    const auto& p = j.contains("params") ? j.at("params") : nlohmann::json::object();
    switch (s.kind) {
      case ScaleKind::Power: s.exponents = {p.at("alpha").get<double>()}; break;
      case ScaleKind::PiecewisePower:
        s.exponents = p.at("exponents").get<std::vector<double>>();
        s.breaks = p.value("breaks", std::vector<double>{});
        s.coefficients = p.value("coefficients", std::vector<double>{});
        break;
      case ScaleKind::LogCorrectedZero: s.log_power = p.at("alpha").get<double>(); break;
      case ScaleKind::LogCorrectedInfty: s.log_power = p.at("beta").get<double>(); break;
      case ScaleKind::Table:
        s.table_r = p.at("r").get<std::vector<double>>();
        s.table_psi = p.at("psi").get<std::vector<double>>();
        if (!s.table_r.empty()) {
          s.r_min = s.table_r.front();
          s.r_max = s.table_r.back();
        }
        break;
    }
    s.r_min = j.value("r_min", s.r_min);
    s.r_max = j.value("r_max", s.r_max);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SpecInvalid, std::string("bad kernel JSON: ") + e.what());
  }
}

ScaleSpec parse_catalog(const std::string& name) {
  const auto colon = name.find(':');
  if (colon == std::string::npos) {
    throw Error(ErrorKind::SpecInvalid, "catalog name '" + name + "' lacks ':'");
  }
  const std::string family = name.substr(0, colon);
  const std::string args = name.substr(colon + 1);
  if (family == "stable" || family == "power") {
    const auto v = split_numbers(args, ',');
    if (v.size() != 1) throw Error(ErrorKind::SpecInvalid, "expected one exponent");
    return ScaleSpec::power(v[0]);
  }
  if (family == "logzero" || family == "loginf") {
    const auto v = split_numbers(args, ',');
    if (v.size() != 1) throw Error(ErrorKind::SpecInvalid, "expected one log power");
    return family == "logzero" ? ScaleSpec::log_zero(v[0]) : ScaleSpec::log_infty(v[0]);
  }
  if (family == "piecewise") {
    const auto at = args.find('@');
    if (at == std::string::npos) {
      throw Error(ErrorKind::SpecInvalid, "piecewise name needs '@breakpoints'");
    }
    return ScaleSpec::piecewise(split_numbers(args.substr(0, at), ','),
                                split_numbers(args.substr(at + 1), ','));
  }
  throw Error(ErrorKind::SpecInvalid, "unknown catalog family '" + family + "'");
}

ScaleFunction::ScaleFunction(ScaleSpec spec, std::optional<int> dim_hint)
    : spec_(std::move(spec)), dim_hint_(dim_hint) {
  validate(spec_);
  switch (spec_.kind) {
    case ScaleKind::Power: break;
    case ScaleKind::PiecewisePower: {
      const auto& a = spec_.exponents;
      for (double b : spec_.breaks) log_breaks_.push_back(std::log(b));
      if (spec_.coefficients.empty()) {
        log_coef_.assign(a.size(), 0.0);
        for (std::size_t i = 1; i < a.size(); ++i) {
          log_coef_[i] = log_coef_[i - 1] + (a[i - 1] - a[i]) * log_breaks_[i - 1];
        }
      } else {
        for (double c : spec_.coefficients) log_coef_.push_back(std::log(c));
        for (std::size_t i = 1; i < a.size(); ++i) {
          const double u = log_breaks_[i - 1];
          const double left = log_coef_[i - 1] + a[i - 1] * u;
          const double right = log_coef_[i] + a[i] * u;
          if (std::abs(left - right) > 1e-9 * std::max(1.0, std::abs(left))) {
            throw Error(ErrorKind::SpecInvalid, "piecewise kernel is discontinuous at r=" +
                                                    std::to_string(spec_.breaks[i - 1]));
          }
        }
      }
      break;
    }
    case ScaleKind::LogCorrectedZero: {
      log_anchor_ = std::log(log_zero_junction(spec_.log_power));
      log_psi_anchor_ = 2.0 * log_anchor_ + spec_.log_power * std::log(-log_anchor_);
      log_breaks_ = {log_anchor_};
      break;
    }
    case ScaleKind::LogCorrectedInfty: {
      log_anchor_ = std::log(kLogInftyJunction);
      log_psi_anchor_ = 2.0 * log_anchor_ + spec_.log_power * std::log(log_anchor_);
      log_breaks_ = {log_anchor_};
      break;
    }
    case ScaleKind::Table: {
      std::vector<double> x, y;
      for (std::size_t i = 0; i < spec_.table_r.size(); ++i) {
        x.push_back(std::log(spec_.table_r[i]));
        y.push_back(std::log(spec_.table_psi[i]));
      }
      log_breaks_ = x;
      table_ = MonotoneTable(std::move(x), std::move(y), Monotone::NonDecreasing,
                             ExponentClamp{0.0, std::numeric_limits<double>::infinity()},
                             ExponentClamp{0.0, std::numeric_limits<double>::infinity()},
                             std::numeric_limits<double>::infinity());
      break;
    }
  }
}

double ScaleFunction::log_value(double u) const {
  switch (spec_.kind) {
    case ScaleKind::Power: return spec_.exponents[0] * u;
    case ScaleKind::PiecewisePower: {
      const auto i = static_cast<std::size_t>(
          std::lower_bound(log_breaks_.begin(), log_breaks_.end(), u) - log_breaks_.begin());
      return log_coef_[i] + spec_.exponents[i] * u;
    }
    case ScaleKind::LogCorrectedZero:
      if (u <= log_anchor_) return 2.0 * u + spec_.log_power * std::log(-u);
      return log_psi_anchor_ + kExtensionExponent * (u - log_anchor_);
    case ScaleKind::LogCorrectedInfty:
      if (u >= log_anchor_) return 2.0 * u + spec_.log_power * std::log(u);
      return log_psi_anchor_ + kExtensionExponent * (u - log_anchor_);
    case ScaleKind::Table: return table_.log_eval(u);
  }
  return 0.0;
}

double ScaleFunction::operator()(double r) const {
  if (!(r > 0.0)) throw Error(ErrorKind::OutOfRange, "psi needs r > 0");
  return std::exp(log_value(std::log(r)));
}

double ScaleFunction::inverse(double t) const {
  if (!(t > 0.0)) return 0.0;
  const double lt = std::log(t);
  double lo = -1.0;
  double hi = 1.0;
  while (log_value(lo) > lt) {
    lo *= 2.0;
    if (lo < -1e4) return 0.0;
  }
  while (log_value(hi) <= lt) {
    hi *= 2.0;
    if (hi > 1e4) throw Error(ErrorKind::OutOfRange, "psi never exceeds " + std::to_string(t));
  }
  for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (log_value(mid) > lt) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return std::exp(hi);
}

std::string ScaleFunction::describe() const {
  std::ostringstream os;
  switch (spec_.kind) {
    case ScaleKind::Power: os << "stable:" << spec_.exponents[0]; break;
    case ScaleKind::PiecewisePower:
      os << "piecewise:";
      for (std::size_t i = 0; i < spec_.exponents.size(); ++i) {
        os << (i ? "," : "") << spec_.exponents[i];
      }
      os << "@";
      for (std::size_t i = 0; i < spec_.breaks.size(); ++i) {
        os << (i ? "," : "") << spec_.breaks[i];
      }
      break;
    case ScaleKind::LogCorrectedZero: os << "logzero:" << spec_.log_power; break;
    case ScaleKind::LogCorrectedInfty: os << "loginf:" << spec_.log_power; break;
    case ScaleKind::Table: os << "table[" << spec_.table_r.size() << "]"; break;
  }
  return os.str();
}

ScaleFunction make_scale(const ScaleSpec& spec) { return ScaleFunction(spec); }

double jump_density(const ScaleFunction& f, int d, double r) {
  if (d < 1) throw Error(ErrorKind::ConfigInvalid, "dimension must be >= 1");
  if (!(r > 0.0)) throw Error(ErrorKind::OutOfRange, "jump density needs r > 0");
  const double u = std::log(r);
  return std::exp(-d * u - f.log_value(u));
}

}  // namespace hke
