#include "rutfinder/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <type_traits>

#include <json.hpp>

#include "rutfinder/error.hpp"

namespace rutfinder {

using nlohmann::json;

namespace {

// One table drives serialisation, merging and key checking.
template <class F>
void for_each_field(RunConfig& c, F&& f) {
  f("eps_theta", c.eps_theta);
  f("prescan_count", c.prescan_count);
  f("roll_stride", c.roll_stride);
  f("roll_refine", c.roll_refine);
  f("d_bin_width", c.d_bin_width);
  f("lambda", c.lambda);
  f("tau_max", c.tau_max);
  f("ransac_iterations", c.ransac_iterations);
  f("sample_size", c.sample_size);
  f("eps_alpha", c.eps_alpha);
  f("halvings", c.halvings);
  f("delta", c.delta);
  f("otsu_bins", c.otsu_bins);
  f("neighbors", c.neighbors);
  f("eps_n", c.eps_n);
  f("block_size", c.block_size);
  f("eps_c0", c.eps_c0);
  f("refine", c.refine);
  f("eps_d", c.eps_d);
  f("min_pixels", c.min_pixels);
  f("focal_length", c.focal_length);
  f("baseline", c.baseline);
  f("seed", c.seed);
  f("threads", c.threads);
}

}  // namespace

void RunConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorKind::InvalidArgument, std::string("config: ") + what, "config");
  };
  require(eps_theta > 0.0, "eps_theta must be positive");
  require(prescan_count >= 0, "prescan_count must be non-negative");
  require(roll_stride >= 0, "roll_stride must be non-negative");
  require(roll_refine >= 0, "roll_refine must be non-negative");
  require(d_bin_width > 0.0, "d_bin_width must be positive");
  require(lambda >= 0.0, "lambda must be non-negative");
  require(tau_max >= 1, "tau_max must be at least 1");
  require(ransac_iterations >= 1, "ransac_iterations must be at least 1");
  require(sample_size >= 3, "sample_size must be at least 3");
  require(eps_alpha > 0.0, "eps_alpha must be positive");
  require(halvings >= 1, "halvings must be at least 1");
  require(std::isfinite(delta), "delta must be finite");
  require(otsu_bins >= 2, "otsu_bins must be at least 2");
  require(neighbors >= 3, "neighbors must be at least 3");
  require(eps_n > 0.0 && eps_n < std::numbers::pi / 2, "eps_n must lie in (0, pi/2)");
  require(block_size >= 1, "block_size must be positive");
  require(eps_c0 > 0.0, "eps_c0 must be positive");
  require(eps_d > 0.0, "eps_d must be positive");
  require(min_pixels >= 1, "min_pixels must be at least 1");
  require(focal_length > 0.0, "focal_length must be positive");
  require(baseline > 0.0, "baseline must be positive");
  require(threads >= 0, "threads must be non-negative");
}

std::string RunConfig::to_json() const {
  json j = json::object();
  RunConfig copy = *this;
  for_each_field(copy, [&](const char* key, auto& value) { j[key] = value; });
  return j.dump(2);
}

void RunConfig::merge_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, std::string("config is not valid JSON: ") + e.what(), "config");
  }
  if (!j.is_object()) throw Error(ErrorKind::Format, "config must be a JSON object", "config");
  RunConfig next = *this;
  std::size_t known = 0;
  for_each_field(next, [&](const char* key, auto& value) {
    const auto it = j.find(key);
    if (it == j.end()) return;
    ++known;
    using T = std::decay_t<decltype(value)>;
    const bool ok = std::is_same_v<T, bool>            ? it->is_boolean()
                    : std::is_floating_point_v<T>     ? it->is_number()
                    : std::is_unsigned_v<T>           ? it->is_number_unsigned()
                                                      : it->is_number_integer();
    if (!ok) throw Error(ErrorKind::InvalidArgument, std::string("config key '") + key + "' has the wrong type", "config");
    value = it->template get<T>();
  });
  if (known != j.size()) {
    for (const auto& item : j.items()) {
      bool found = false;
      for_each_field(next, [&](const char* key, auto&) { found = found || item.key() == key; });
      if (!found) throw Error(ErrorKind::InvalidArgument, "unknown config key '" + item.key() + "'", "config");
    }
  }
  next.validate();
  *this = next;
}

RunConfig RunConfig::from_json(const std::string& text) {
  RunConfig c;
  c.merge_json(text);
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read config " + path.string(), "config");
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace rutfinder
