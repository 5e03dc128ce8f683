#include "clebsch/profile.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/math/interpolators/makima.hpp>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace clebsch {

struct ScalarProfile::Spline {
  explicit Spline(std::vector<double> x, std::vector<double> y)
      : interp(std::move(x), std::move(y)) {}
  boost::math::interpolators::makima<std::vector<double>> interp;
};

ScalarProfile::ScalarProfile() : kind_(Kind::polynomial), params_{1.0} {}

ScalarProfile ScalarProfile::constant(double c) { return polynomial({c}); }

ScalarProfile ScalarProfile::exponential(double amplitude, double rate) {
  ScalarProfile p;
  p.kind_ = Kind::exponential;
  p.params_ = {amplitude, rate};
  return p;
}

ScalarProfile ScalarProfile::polynomial(std::vector<double> coeffs) {
  if (coeffs.empty()) throw std::invalid_argument("polynomial profile needs coefficients");
  ScalarProfile p;
  p.kind_ = Kind::polynomial;
  p.params_ = std::move(coeffs);
  return p;
}

ScalarProfile ScalarProfile::table(std::vector<double> x, std::vector<double> y) {
  if (x.size() != y.size() || x.size() < 4)
    throw std::invalid_argument("table profile needs at least four (x, y) pairs");
  for (std::size_t i = 1; i < x.size(); ++i)
    if (!(x[i] > x[i - 1])) throw std::invalid_argument("table abscissae must increase");
  ScalarProfile p;
  p.kind_ = Kind::table;
  p.knots_x_ = x;
  p.knots_y_ = y;
  p.spline_ = std::make_shared<const Spline>(std::move(x), std::move(y));
  return p;
}

ScalarProfile ScalarProfile::trigonometric(std::vector<double> coeffs) {
  if (coeffs.empty() || coeffs.size() % 2 == 0)
    throw std::invalid_argument("trig profile takes a0 followed by (a_k, b_k) pairs");
  ScalarProfile p;
  p.kind_ = Kind::trigonometric;
  p.params_ = std::move(coeffs);
  return p;
}

namespace {

std::vector<double> parse_list(const std::string& s, const char* sep) {
  std::vector<std::string> parts;
  boost::split(parts, s, boost::is_any_of(sep));
  std::vector<double> out;
  for (auto& part : parts) {
    boost::trim(part);
    if (part.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(part, &used);
    if (used != part.size()) throw std::invalid_argument("bad number '" + part + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

ScalarProfile ScalarProfile::parse(std::string_view text) {
  std::string s(text);
  boost::trim(s);
  const auto colon = s.find(':');
  if (colon == std::string::npos)
    throw std::invalid_argument("profile must look like kind:params, got '" + s + "'");
  const std::string kind = boost::to_lower_copy(s.substr(0, colon));
  const std::string body = s.substr(colon + 1);
  try {
    if (kind == "const") {
      const auto v = parse_list(body, ",");
      if (v.size() != 1) throw std::invalid_argument("const takes one value");
      return constant(v[0]);
    }
    if (kind == "exp") {
      const auto v = parse_list(body, ",");
      if (v.size() != 2) throw std::invalid_argument("exp takes A,k");
      return exponential(v[0], v[1]);
    }
    if (kind == "poly") return polynomial(parse_list(body, ","));
    if (kind == "trig") return trigonometric(parse_list(body, ","));
    if (kind == "table") {
      std::vector<std::string> pairs;
      boost::split(pairs, body, boost::is_any_of(";"));
      std::vector<double> x, y;
      for (auto& pr : pairs) {
        boost::trim(pr);
        if (pr.empty()) continue;
        const auto v = parse_list(pr, "=");
        if (v.size() != 2) throw std::invalid_argument("table entries are x=y");
        x.push_back(v[0]);
        y.push_back(v[1]);
      }
      return table(std::move(x), std::move(y));
    }
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("profile '" + s + "': " + e.what());
  } catch (const std::out_of_range&) {
    throw std::invalid_argument("profile '" + s + "': number out of range");
  }
  throw std::invalid_argument("unknown profile kind '" + kind + "'");
}

double ScalarProfile::value(double x) const {
  switch (kind_) {
    case Kind::polynomial: {
      double v = 0.0;
      for (auto it = params_.rbegin(); it != params_.rend(); ++it) v = v * x + *it;
      return v;
    }
    case Kind::exponential:
      return params_[0] * std::exp(params_[1] * x);
    case Kind::table:
      return spline_->interp(x);
    case Kind::trigonometric: {
      double v = params_[0];
      for (std::size_t k = 1; 2 * k < params_.size() + 1; ++k)
        v += params_[2 * k - 1] * std::cos(k * x) + params_[2 * k] * std::sin(k * x);
      return v;
    }
  }
  return 0.0;
}

double ScalarProfile::derivative(double x) const {
  switch (kind_) {
    case Kind::polynomial: {
      double v = 0.0;
      for (std::size_t k = params_.size() - 1; k >= 1; --k) v = v * x + k * params_[k];
      return v;
    }
    case Kind::exponential:
      return params_[0] * params_[1] * std::exp(params_[1] * x);
    case Kind::table:
      return spline_->interp.prime(x);
    case Kind::trigonometric: {
      double v = 0.0;
      for (std::size_t k = 1; 2 * k < params_.size() + 1; ++k)
        v += k * (-params_[2 * k - 1] * std::sin(k * x) + params_[2 * k] * std::cos(k * x));
      return v;
    }
  }
  return 0.0;
}

bool ScalarProfile::differentiable_on(double lo, double hi) const {
  if (kind_ != Kind::table) return true;
  return lo >= knots_x_.front() && hi <= knots_x_.back();
}

std::string ScalarProfile::to_string() const {
  std::ostringstream os;
  os.precision(17);
  auto list = [&](const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  };
  switch (kind_) {
    case Kind::polynomial:
      os << "poly:";
      list(params_);
      break;
    case Kind::exponential:
      os << "exp:";
      list(params_);
      break;
    case Kind::trigonometric:
      os << "trig:";
      list(params_);
      break;
    case Kind::table:
      os << "table:";
      for (std::size_t i = 0; i < knots_x_.size(); ++i)
        os << (i ? ";" : "") << knots_x_[i] << "=" << knots_y_[i];
      break;
  }
  return os.str();
}

}  // namespace clebsch
