#include "riskprof/pipeline.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "riskprof/association.hpp"
#include "riskprof/cross_validation.hpp"
#include "riskprof/csv.hpp"
#include "riskprof/digest.hpp"
#include "riskprof/glmm_report.hpp"
#include "riskprof/loo.hpp"
#include "riskprof/model_rows.hpp"
#include "riskprof/parallel.hpp"
#include "riskprof/sampling_plan.hpp"

namespace riskprof {

namespace fs = std::filesystem;

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Simulate: return "simulate";
    case Stage::Ingest: return "ingest";
    case Stage::Smooth: return "smooth";
    case Stage::Assoc: return "assoc";
    case Stage::ProfileEval: return "profile-eval";
    case Stage::Fit: return "fit";
    case Stage::Compare: return "compare";
    case Stage::Report: return "report";
  }
  return "unknown";
}

Stage parse_stage(std::string_view text) {
  for (auto s : kAllStages) {
    if (to_string(s) == text) return s;
  }
  throw ValidationError("unknown stage '" + std::string(text) + "'");
}

namespace {

std::string kind_file(std::string_view prefix, InterceptionKind kind) {
  return std::string(prefix) + "_" + std::string(to_string(kind)) + ".csv";
}

/// Collects the inputs and outputs of one stage for the manifest.
class StageIo {
 public:
  StageIo(const fs::path& root, Stage stage) : root_(root), stage_(stage) {}

  fs::path input(const fs::path& rel, Stage producer) {
    const fs::path p = root_ / rel;
    if (!fs::is_regular_file(p)) {
      throw StageDependencyError("stage " + std::string(to_string(stage_)) + " needs " +
                                 rel.generic_string() + "; run `" +
                                 std::string(to_string(producer)) + "` first");
    }
    inputs_.push_back(p);
    return p;
  }

  /// External input digested by file name rather than location.
  void external(const fs::path& p) { external_ += p.filename().string() + " " + sha256_file(p) + "\n"; }

  void write(const fs::path& rel, const std::function<void(std::ostream&)>& body) {
    const fs::path p = root_ / rel;
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    body(out);
    out.close();
    if (!out) throw std::runtime_error("write failed: " + p.string());
    outputs_.push_back(p);
  }

  std::string inputs_digest() const {
    std::string lines = external_;
    for (const auto& p : inputs_) {
      lines += fs::relative(p, root_).generic_string() + " " + sha256_file(p) + "\n";
    }
    return sha256_hex(lines);
  }
  std::string outputs_digest() const { return combined_digest(root_, outputs_); }

 private:
  fs::path root_;
  Stage stage_;
  std::vector<fs::path> inputs_;
  std::vector<fs::path> outputs_;
  std::string external_;
};

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  return in;
}

std::vector<CellCounts> load_cells(StageIo& io, InterceptionKind kind) {
  auto in = open_in(io.input(fs::path("data") / kind_file("cells", kind), Stage::Ingest));
  return read_cells(in);
}

SmoothedRates load_smoothed(StageIo& io, InterceptionKind kind) {
  auto hin = open_in(io.input(fs::path("smooth") / kind_file("hypers", kind), Stage::Smooth));
  auto sin = open_in(io.input(fs::path("smooth") / kind_file("smoothed", kind), Stage::Smooth));
  return read_smoothed(hin, sin, kind);
}

ModelFit load_model(StageIo& io, ModelId id) {
  auto in = open_in(io.input(fs::path("fit") / (std::string(to_string(id)) + ".bin"), Stage::Fit));
  return load_fit(in);
}

std::uint64_t model_seed(std::uint64_t base, ModelId id) {
  return base ^ ((static_cast<std::uint64_t>(id) + 1) * 0x9E3779B97F4A7C15ULL);
}

std::string seed_text(const std::optional<std::uint64_t>& s) { return s ? std::to_string(*s) : ""; }

}  // namespace

Pipeline::Pipeline(RunConfig config, std::ostream& log) : config_(std::move(config)), log_(log) {}

StageRecord Pipeline::run(Stage stage) {
  const auto start = std::chrono::steady_clock::now();
  StageRecord r;
  switch (stage) {
    case Stage::Simulate: r = simulate(); break;
    case Stage::Ingest: r = ingest(); break;
    case Stage::Smooth: r = smooth(); break;
    case Stage::Assoc: r = assoc(); break;
    case Stage::ProfileEval: r = profile_eval(); break;
    case Stage::Fit: r = fit(); break;
    case Stage::Compare: r = compare(); break;
    case Stage::Report: r = report(); break;
  }
  r.stage = stage;
  r.config_digest = sha256_hex(config_.canonical());
  r.duration = std::chrono::steady_clock::now() - start;
  record(r);
  log_ << to_string(stage) << ": done in " << format_fixed(r.duration.count(), 2) << " s\n";
  return r;
}

std::vector<StageRecord> Pipeline::run_all() {
  std::vector<StageRecord> out;
  for (auto s : kAllStages) {
    if (s == Stage::Simulate && config_.input) {
      log_ << "simulate: skipped, config names an input file\n";
      continue;
    }
    out.push_back(run(s));
  }
  return out;
}

void Pipeline::record(const StageRecord& r) {
  const fs::path path = config_.out / "manifest.tsv";
  std::map<int, std::string> lines;
  if (std::ifstream in(path); in) {
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      const auto tab = line.find('\t');
      if (tab == std::string::npos) continue;
      lines[static_cast<int>(parse_stage(line.substr(0, tab)))] = line;
    }
  }
  lines[static_cast<int>(r.stage)] = std::string(to_string(r.stage)) + "\t" + r.seed + "\t" +
                                     r.config_digest + "\t" + r.inputs_digest + "\t" +
                                     r.outputs_digest;
  fs::create_directories(config_.out);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << "stage\tseed\tconfig_sha256\tinputs_sha256\toutputs_sha256\n";
  for (const auto& [_, line] : lines) out << line << '\n';
  std::ofstream cfg(config_.out / "config.resolved", std::ios::binary | std::ios::trunc);
  cfg << config_.canonical();
}

StageRecord Pipeline::simulate() {
  if (config_.input) throw ValidationError("simulate: config names an input file; nothing to simulate");
  StageIo io(config_.out, Stage::Simulate);
  const Pathway pathway = generate_pathway(config_.sim);
  io.write("sim/inspections.csv", [&](std::ostream& o) { write_inspections(o, pathway.records); });
  io.write("sim/truth.csv", [&](std::ostream& o) { write_truth(o, pathway.truth); });

  std::vector<std::uint8_t> stream;
  for (const auto& r : pathway.records) stream.push_back(r.regulated ? 1 : 0);
  const std::uint64_t seed = *config_.seed_simulate;
  std::vector<SchemeMetrics> metrics{
      run_scheme(stream, Scheme::census(), seed),
      run_scheme(stream, Scheme::random(config_.csp_f), seed + 1),
      run_scheme(stream, Scheme::csp3(config_.csp_i, config_.csp_f, config_.csp_m), seed + 2)};
  io.write("sim/scheme_metrics.csv", [&](std::ostream& o) { write_metrics(o, metrics); });

  StageRecord r;
  r.seed = seed_text(config_.seed_simulate);
  r.inputs_digest = io.inputs_digest();
  r.outputs_digest = io.outputs_digest();
  return r;
}

StageRecord Pipeline::ingest() {
  StageIo io(config_.out, Stage::Ingest);
  fs::path source;
  if (config_.input) {
    source = *config_.input;
    if (!fs::is_regular_file(source)) throw ValidationError("input: cannot read " + source.string());
    io.external(source);
  } else {
    source = io.input("sim/inspections.csv", Stage::Simulate);
  }
  auto in = open_in(source);
  const auto records = parse_inspections(in, config_.effective_window());
  if (records.empty()) throw ValidationError("ingest: no inspection records in the year window");
  io.write("data/inspections.csv", [&](std::ostream& o) { write_inspections(o, records); });
  for (auto kind : kAllKinds) {
    const auto cells = aggregate(records, kind);
    io.write(fs::path("data") / kind_file("cells", kind), [&](std::ostream& o) { write_cells(o, cells); });
  }
  StageRecord r;
  r.inputs_digest = io.inputs_digest();
  r.outputs_digest = io.outputs_digest();
  return r;
}

StageRecord Pipeline::smooth() {
  StageIo io(config_.out, Stage::Smooth);
  std::map<InterceptionKind, SmoothedRates> rates;
  std::vector<CellCounts> regulated;
  for (auto kind : kAllKinds) {
    const auto cells = load_cells(io, kind);
    if (kind == InterceptionKind::Regulated) regulated = cells;
    rates[kind] = smooth_cells(cells, config_.workers);
    const auto& sr = rates[kind];
    io.write(fs::path("smooth") / kind_file("hypers", kind),
             [&](std::ostream& o) { write_hypers(o, sr.hypers()); });
    io.write(fs::path("smooth") / kind_file("smoothed", kind),
             [&](std::ostream& o) { write_smoothed(o, sr); });
  }
  long unconverged = 0;
  for (const auto& [_, sr] : rates) {
    for (const auto& h : sr.hypers()) unconverged += h.converged ? 0 : 1;
  }
  if (unconverged > 0) {
    log_ << "smooth: " << unconverged << " tariff-year fits at a boundary or unconverged\n";
  }
  const PriorYearRates prior{&rates[InterceptionKind::Regulated],
                             &rates[InterceptionKind::NonRegulated],
                             &rates[InterceptionKind::Administrative]};
  const auto rows = build_model_rows(regulated, prior, config_.effective_window());
  io.write("smooth/model_rows.csv", [&](std::ostream& o) { write_model_rows(o, rows); });
  StageRecord r;
  r.inputs_digest = io.inputs_digest();
  r.outputs_digest = io.outputs_digest();
  return r;
}

StageRecord Pipeline::assoc() {
  StageIo io(config_.out, Stage::Assoc);
  auto in = open_in(io.input("data/inspections.csv", Stage::Ingest));
  const auto records = parse_inspections(in);
  const auto table = association_table(records);
  io.write("assoc/log_odds.csv", [&](std::ostream& o) { write_association(o, table); });
  StageRecord r;
  r.inputs_digest = io.inputs_digest();
  r.outputs_digest = io.outputs_digest();
  return r;
}

StageRecord Pipeline::profile_eval() {
  StageIo io(config_.out, Stage::ProfileEval);
  const auto outcomes = load_cells(io, InterceptionKind::Regulated);
  std::map<int, std::vector<CellCounts>> outcomes_by_year;
  for (const auto& c : outcomes) outcomes_by_year[c.year].push_back(c);

  std::vector<AcrossResult> across;
  std::vector<WithinRow> within;
  std::vector<std::vector<std::string>> skipped;
  const YearWindow w = config_.effective_window();
  for (auto kind : config_.profile_kinds) {
    const SmoothedRates rates = load_smoothed(io, kind);
    for (int year = w.first; year < w.last; ++year) {
      if (!rates.covers_year(year) || !outcomes_by_year.contains(year + 1)) {
        skipped.push_back({std::to_string(year), std::string(to_string(kind)), "",
                           "no data for profile or outcome year"});
        continue;
      }
      for (auto variant : config_.profile_variants) {
        const Profile profile = build_profile(rates, year, variant);
        const auto& next = outcomes_by_year[year + 1];
        try {
          across.push_back(evaluate_across(profile, next));
        } catch (const UndefinedAuc& e) {
          skipped.push_back({std::to_string(year), std::string(to_string(kind)),
                             std::string(to_string(variant)), e.what()});
        }
        for (auto& res : evaluate_within_tariff(profile, next)) {
          within.push_back({year, kind, variant, std::move(res)});
        }
      }
    }
  }
  io.write("profile/across.csv", [&](std::ostream& o) { write_across(o, across); });
  io.write("profile/roc_points.csv", [&](std::ostream& o) { write_roc_points(o, across); });
  io.write("profile/within.csv", [&](std::ostream& o) { write_within(o, within); });
  io.write("profile/skipped.csv", [&](std::ostream& o) {
    csv::Writer cw(o);
    cw.row({"profile_year", "kind", "variant", "reason"});
    for (const auto& row : skipped) cw.row(row);
  });
  StageRecord r;
  r.inputs_digest = io.inputs_digest();
  r.outputs_digest = io.outputs_digest();
  return r;
}

StageRecord Pipeline::fit() {
  StageIo io(config_.out, Stage::Fit);
  auto in = open_in(io.input("smooth/model_rows.csv", Stage::Smooth));
  const auto rows = read_model_rows(in);
  if (rows.empty()) throw ValidationError("fit: no model rows (need at least two years of data)");
  const auto& models = config_.models;
  std::vector<ModelFit> fits(models.size());
  parallel_for(models.size(), config_.workers, [&](std::size_t k) {
    fits[k] = fit_map(rows, ModelSpec::make(models[k]), config_.priors, config_.fit,
                      model_seed(*config_.seed_fit, models[k]));
  });
  for (const auto& f : fits) {
    const std::string id(to_string(f.spec.id));
    io.write(fs::path("fit") / (id + ".bin"), [&](std::ostream& o) { save_fit(o, f); });
    io.write(fs::path("fit") / ("params_" + id + ".csv"),
             [&](std::ostream& o) { write_parameter_summary(o, f); });
    if (!f.diagnostics.converged) log_ << "fit: " << id << " did not converge\n";
  }
  io.write("fit/diagnostics.csv", [&](std::ostream& o) {
    csv::Writer w(o);
    w.row({"model", "seed", "converged", "gradient_norm", "outer_iterations", "inner_iterations",
           "hessian_jittered", "log_marginal", "draws", "notes"});
    for (const auto& f : fits) {
      const auto& d = f.diagnostics;
      std::string notes;
      for (const auto& n : d.notes) notes += (notes.empty() ? "" : "; ") + n;
      w.row({std::string(to_string(f.spec.id)), std::to_string(f.seed), d.converged ? "1" : "0",
             format_double(d.gradient_norm), std::to_string(d.outer_iterations),
             std::to_string(d.inner_iterations), d.hessian_jittered ? "1" : "0",
             format_double(d.log_marginal), std::to_string(f.draw_count()), notes});
    }
  });
  StageRecord r;
  r.seed = seed_text(config_.seed_fit);
  r.inputs_digest = io.inputs_digest();
  r.outputs_digest = io.outputs_digest();
  return r;
}

StageRecord Pipeline::compare() {
  StageIo io(config_.out, Stage::Compare);
  std::vector<LooResult> loo;
  for (auto id : config_.models) {
    const ModelFit f = load_model(io, id);
    loo.push_back(is_loo(pointwise_loglik(f, f.rows), std::string(to_string(id))));
  }
  const auto table = compare_table(loo);
  io.write("compare/loo.csv", [&](std::ostream& o) { write_comparison(o, table); });

  auto in = open_in(io.input("smooth/model_rows.csv", Stage::Smooth));
  const auto rows = read_model_rows(in);
  const std::uint64_t seed = *config_.seed_compare;
  const CvPlan plan = make_cv_plan(rows, config_.cv_folds, config_.cv_repeats, seed);
  std::vector<ModelSpec> specs;
  for (auto id : config_.cv_models) specs.push_back(ModelSpec::make(id));
  FitConfig cv_fit = config_.fit;
  cv_fit.draws = config_.cv_draws;
  const auto splits = cv_evaluate(specs, rows, plan, config_.priors, cv_fit, seed, config_.workers);
  const auto summary = summarize_cv(splits);
  io.write("compare/cv_splits.csv", [&](std::ostream& o) { write_cv_splits(o, splits); });
  io.write("compare/cv_summary.csv", [&](std::ostream& o) { write_cv_summary(o, summary); });
  StageRecord r;
  r.seed = seed_text(config_.seed_compare);
  r.inputs_digest = io.inputs_digest();
  r.outputs_digest = io.outputs_digest();
  return r;
}

StageRecord Pipeline::report() {
  StageIo io(config_.out, Stage::Report);
  const ModelFit f = load_model(io, config_.report_model);
  for (auto g : f.spec.groups) {
    if (g != EffectGroup::Supplier && g != EffectGroup::Tariff) continue;
    const auto effects = marginal_effect_summary(f, g);
    io.write(fs::path("report") / ("marginal_" + std::string(to_string(g)) + ".csv"),
             [&](std::ostream& o) { write_marginal(o, effects); });
  }
  if (f.spec.has_group(EffectGroup::SupplierTariff)) {
    const auto count = static_cast<std::size_t>(config_.report_count);
    const auto top = supplier_tariff_report(f, ReportDirection::Top, count);
    const auto bottom = supplier_tariff_report(f, ReportDirection::Bottom, count);
    io.write("report/top_supplier_tariff.csv", [&](std::ostream& o) { write_supplier_tariff(o, top); });
    io.write("report/bottom_supplier_tariff.csv",
             [&](std::ostream& o) { write_supplier_tariff(o, bottom); });
  } else {
    log_ << "report: " << to_string(f.spec.id)
         << " has no supplier x tariff effects; supplier-tariff tables not written\n";
  }
  io.write("report/parameters.csv", [&](std::ostream& o) { write_parameter_summary(o, f); });
  StageRecord r;
  r.inputs_digest = io.inputs_digest();
  r.outputs_digest = io.outputs_digest();
  return r;
}

int run_subcommand(std::string_view subcommand, const RunConfig& config, std::ostream& log) {
  try {
    Pipeline p(config, log);
    if (subcommand == "all") p.run_all();
    else p.run(parse_stage(subcommand));
    return 0;
  } catch (const ValidationError& e) {
    log << "validation error: " << e.what() << '\n';
    return 1;
  } catch (const StageDependencyError& e) {
    log << "stage dependency error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    log << "numerical failure: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace riskprof
