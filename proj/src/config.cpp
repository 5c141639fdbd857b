#include "riskprof/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

namespace riskprof {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
std::optional<T> parse_number(const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& items) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += ',';
    out += to_string(item);
  }
  return out;
}

struct Field {
  std::string key;
  std::function<bool(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field number_field(std::string key, T RunConfig::*member) {
  return {key,
          [member](RunConfig& c, const std::string& v) {
            auto n = parse_number<T>(v);
            if (n) c.*member = *n;
            return n.has_value();
          },
          [member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double(c.*member);
            else return std::to_string(c.*member);
          }};
}

template <typename Owner, typename T>
Field nested_field(std::string key, Owner RunConfig::*owner, T Owner::*member) {
  return {key,
          [owner, member](RunConfig& c, const std::string& v) {
            auto n = parse_number<T>(v);
            if (n) c.*owner.*member = *n;
            return n.has_value();
          },
          [owner, member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double(c.*owner.*member);
            else return std::to_string(c.*owner.*member);
          }};
}

Field seed_field(std::string key, std::optional<std::uint64_t> RunConfig::*member) {
  return {key,
          [member](RunConfig& c, const std::string& v) {
            auto n = parse_number<std::uint64_t>(v);
            if (n) c.*member = *n;
            return n.has_value();
          },
          [member](const RunConfig& c) {
            return c.*member ? std::to_string(*(c.*member)) : std::string();
          }};
}

template <typename T, typename Parse>
Field list_field(std::string key, std::vector<T> RunConfig::*member, Parse parse) {
  return {key,
          [member, parse](RunConfig& c, const std::string& v) {
            std::vector<T> items;
            try {
              for (const auto& s : split_list(v)) items.push_back(parse(s));
            } catch (const std::exception&) {
              return false;
            }
            c.*member = std::move(items);
            return true;
          },
          [member](const RunConfig& c) { return join(c.*member); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"input",
                 [](RunConfig& c, const std::string& v) {
                   if (v.empty()) c.input.reset();
                   else c.input = v;
                   return true;
                 },
                 [](const RunConfig& c) { return c.input ? c.input->string() : std::string(); }});
    f.push_back({"out",
                 [](RunConfig& c, const std::string& v) {
                   c.out = v;
                   return !v.empty();
                 },
                 [](const RunConfig& c) { return c.out.string(); }});
    auto year_setter = [](bool first) {
      return [first](RunConfig& c, const std::string& v) {
        auto n = parse_number<int>(v);
        if (!n) return false;
        if (!c.window) c.window = YearWindow{};
        (first ? c.window->first : c.window->last) = *n;
        return true;
      };
    };
    f.push_back({"years.first", year_setter(true),
                 [](const RunConfig& c) { return std::to_string(c.effective_window().first); }});
    f.push_back({"years.last", year_setter(false),
                 [](const RunConfig& c) { return std::to_string(c.effective_window().last); }});
    f.push_back(number_field("workers", &RunConfig::workers));
    f.push_back(list_field("profile.kinds", &RunConfig::profile_kinds,
                           [](const std::string& s) { return parse_kind(s); }));
    f.push_back(list_field("profile.variants", &RunConfig::profile_variants,
                           [](const std::string& s) { return parse_variant(s); }));
    f.push_back(list_field("models", &RunConfig::models,
                           [](const std::string& s) { return parse_model_id(s); }));
    f.push_back(nested_field("prior.df", &RunConfig::priors, &Priors::df));
    f.push_back(nested_field("prior.intercept_scale", &RunConfig::priors, &Priors::intercept_scale));
    f.push_back(nested_field("prior.coef_scale", &RunConfig::priors, &Priors::coef_scale));
    f.push_back(nested_field("prior.sigma_df", &RunConfig::priors, &Priors::sigma_df));
    f.push_back(nested_field("prior.sigma_scale", &RunConfig::priors, &Priors::sigma_scale));
    f.push_back(nested_field("prior.spline_dim", &RunConfig::priors, &Priors::spline_dim));
    f.push_back(nested_field("fit.draws", &RunConfig::fit, &FitConfig::draws));
    f.push_back(nested_field("fit.max_outer_iterations", &RunConfig::fit,
                             &FitConfig::max_outer_iterations));
    f.push_back(nested_field("fit.max_inner_iterations", &RunConfig::fit,
                             &FitConfig::max_inner_iterations));
    f.push_back(list_field("cv.models", &RunConfig::cv_models,
                           [](const std::string& s) { return parse_model_id(s); }));
    f.push_back(number_field("cv.folds", &RunConfig::cv_folds));
    f.push_back(number_field("cv.repeats", &RunConfig::cv_repeats));
    f.push_back(number_field("cv.draws", &RunConfig::cv_draws));
    f.push_back({"report.model",
                 [](RunConfig& c, const std::string& v) {
                   try {
                     c.report_model = parse_model_id(v);
                   } catch (const std::exception&) {
                     return false;
                   }
                   return true;
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.report_model)); }});
    f.push_back(number_field("report.count", &RunConfig::report_count));
    f.push_back(nested_field("sim.suppliers", &RunConfig::sim, &SimConfig::suppliers));
    f.push_back(nested_field("sim.tariffs", &RunConfig::sim, &SimConfig::tariffs));
    f.push_back(nested_field("sim.years", &RunConfig::sim, &SimConfig::years));
    f.push_back(nested_field("sim.first_year", &RunConfig::sim, &SimConfig::first_year));
    f.push_back(nested_field("sim.tariffs_per_supplier", &RunConfig::sim,
                             &SimConfig::tariffs_per_supplier));
    f.push_back(nested_field("sim.consignments_mean", &RunConfig::sim, &SimConfig::consignments_mean));
    f.push_back(nested_field("sim.consignments_size", &RunConfig::sim, &SimConfig::consignments_size));
    f.push_back(nested_field("sim.beta0", &RunConfig::sim, &SimConfig::beta0));
    f.push_back(nested_field("sim.sigma_supplier", &RunConfig::sim, &SimConfig::sigma_supplier));
    f.push_back(nested_field("sim.sigma_tariff", &RunConfig::sim, &SimConfig::sigma_tariff));
    f.push_back(nested_field("sim.sigma_year", &RunConfig::sim, &SimConfig::sigma_year));
    f.push_back(nested_field("sim.sigma_supplier_tariff", &RunConfig::sim,
                             &SimConfig::sigma_supplier_tariff));
    f.push_back(nested_field("sim.sigma_supplier_year", &RunConfig::sim,
                             &SimConfig::sigma_supplier_year));
    f.push_back(nested_field("sim.planted_count", &RunConfig::sim, &SimConfig::planted_count));
    f.push_back(nested_field("sim.planted_offset", &RunConfig::sim, &SimConfig::planted_offset));
    f.push_back(nested_field("sim.association_strength", &RunConfig::sim,
                             &SimConfig::association_strength));
    f.push_back(nested_field("sim.non_regulated_base", &RunConfig::sim,
                             &SimConfig::non_regulated_base));
    f.push_back(nested_field("sim.administrative_base", &RunConfig::sim,
                             &SimConfig::administrative_base));
    f.push_back(number_field("csp.i", &RunConfig::csp_i));
    f.push_back(number_field("csp.f", &RunConfig::csp_f));
    f.push_back(number_field("csp.m", &RunConfig::csp_m));
    f.push_back(seed_field("seed.simulate", &RunConfig::seed_simulate));
    f.push_back(seed_field("seed.fit", &RunConfig::seed_fit));
    f.push_back(seed_field("seed.compare", &RunConfig::seed_compare));
    std::sort(f.begin(), f.end(), [](const Field& a, const Field& b) { return a.key < b.key; });
    return f;
  }();
  return table;
}

}  // namespace

std::optional<std::string> RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (f.key == key) {
      if (!f.set(*this, value)) return key + ": invalid value '" + value + "'";
      return std::nullopt;
    }
  }
  return "unknown key '" + key + "'";
}

YearWindow RunConfig::effective_window() const {
  if (window) return *window;
  return {sim.first_year, sim.first_year + sim.years - 1};
}

std::vector<std::string> RunConfig::violations() const {
  std::vector<std::string> v;
  if (window && window->first > window->last) v.push_back("years.first must be <= years.last");
  if (input && !window) v.push_back("years.first and years.last are required with input");
  if (window && effective_window().last - effective_window().first < 1) {
    v.push_back("year window must span at least two years");
  }
  if (!window && sim.years < 2) v.push_back("sim.years must be >= 2");
  if (workers < 1) v.push_back("workers must be >= 1");
  if (profile_kinds.empty()) v.push_back("profile.kinds must not be empty");
  if (profile_variants.empty()) v.push_back("profile.variants must not be empty");
  if (models.size() < 2) v.push_back("models must list at least two specs");
  if (!(priors.df > 0)) v.push_back("prior.df must be > 0");
  if (!(priors.intercept_scale > 0)) v.push_back("prior.intercept_scale must be > 0");
  if (!(priors.coef_scale > 0)) v.push_back("prior.coef_scale must be > 0");
  if (!(priors.sigma_df > 0)) v.push_back("prior.sigma_df must be > 0");
  if (!(priors.sigma_scale > 0)) v.push_back("prior.sigma_scale must be > 0");
  if (priors.spline_dim < 1) v.push_back("prior.spline_dim must be >= 1");
  if (fit.draws < 100) v.push_back("fit.draws must be >= 100");
  if (fit.max_outer_iterations < 1) v.push_back("fit.max_outer_iterations must be >= 1");
  if (fit.max_inner_iterations < 1) v.push_back("fit.max_inner_iterations must be >= 1");
  if (cv_models.empty()) v.push_back("cv.models must not be empty");
  if (cv_folds < 2) v.push_back("cv.folds must be >= 2");
  if (cv_repeats < 1) v.push_back("cv.repeats must be >= 1");
  if (cv_draws < 1) v.push_back("cv.draws must be >= 1");
  if (std::find(models.begin(), models.end(), report_model) == models.end()) {
    v.push_back("report.model must be one of models");
  }
  if (report_count < 1) v.push_back("report.count must be >= 1");
  if (!input) {
    for (const auto& s : sim.violations()) v.push_back("sim." + s);
    if (!seed_simulate) v.push_back("seed.simulate is required");
  }
  if (csp_i < 1) v.push_back("csp.i must be >= 1");
  if (!(csp_f > 0.0 && csp_f <= 1.0)) v.push_back("csp.f must be in (0, 1]");
  if (csp_m < 1) v.push_back("csp.m must be >= 1");
  if (!seed_fit) v.push_back("seed.fit is required");
  if (!seed_compare) v.push_back("seed.compare is required");
  return v;
}

std::string RunConfig::canonical() const {
  std::string out;
  for (const auto& f : fields()) {
    // Output location and worker count do not change any artifact.
    if (f.key == "out" || f.key == "workers") continue;
    out += f.key + " = " + f.get(*this) + "\n";
  }
  return out;
}

RunConfig load_config(std::istream& in, const std::map<std::string, std::string>& overrides) {
  RunConfig c;
  std::vector<std::string> errors;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string text = trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(line_no) + ": expected key = value");
      continue;
    }
    if (auto err = c.set(trim(text.substr(0, eq)), trim(text.substr(eq + 1)))) {
      errors.push_back("line " + std::to_string(line_no) + ": " + *err);
    }
  }
  for (const auto& [key, value] : overrides) {
    if (auto err = c.set(key, value)) errors.push_back("override " + *err);
  }
  for (auto& v : c.violations()) errors.push_back(std::move(v));
  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ValidationError(msg);
  }
  if (c.seed_simulate) c.sim.seed = *c.seed_simulate;
  return c;
}

RunConfig load_config_file(const std::filesystem::path& path,
                           const std::map<std::string, std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config " + path.string());
  return load_config(in, overrides);
}

}  // namespace riskprof
