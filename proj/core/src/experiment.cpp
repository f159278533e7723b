#include "dissl/experiment.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace dissl::expcli {

namespace fs = std::filesystem;
using nlohmann::json;
using trainkit::LambdaPolicy;
using trainkit::Mat;
using trainkit::TrainConfig;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string format_number(double v) {
  std::ostringstream out;
  out.precision(12);
  out << v;
  return out.str();
}

}  // namespace

// ---- config -----------------------------------------------------------------

void ExperimentConfig::resolve() {
  if (experiment == "numerical-fig2") {
    if (steps < 0) steps = 2000;
    if (batch_size < 0) batch_size = 256;
    if (hidden.empty()) hidden = {256, 256};
    if (repr_dim < 0) repr_dim = 64;
    if (space_dims.empty()) space_dims = {0};  // single space, swept dim
    if (eval_train < 0) eval_train = 2000;
    if (eval_test < 0) eval_test = 1000;
  } else if (experiment == "sprites-table2") {
    if (steps < 0) steps = 1500;
    if (batch_size < 0) batch_size = 128;
    if (hidden.empty()) hidden = {128};
    if (repr_dim < 0) repr_dim = 64;
    if (space_dims.empty()) space_dims = {32, 8};
    if (eval_train < 0) eval_train = 4000;
    if (eval_test < 0) eval_test = 2000;
  } else if (experiment == "multispace-m2") {
    if (steps < 0) steps = 2500;
    if (batch_size < 0) batch_size = 129;  // three modes per cycle
    if (hidden.empty()) hidden = {128};
    if (repr_dim < 0) repr_dim = 64;
    if (space_dims.empty()) space_dims = {16, 8, 16};
    if (eval_train < 0) eval_train = 4000;
    if (eval_test < 0) eval_test = 2000;
    strengths = {"medium"};
    lambda_modes = {"adapted"};
  } else {
    throw std::invalid_argument("config: unknown experiment id '" +
                                experiment + "'");
  }
}

void ExperimentConfig::validate() const {
  if (experiment != "numerical-fig2" && experiment != "sprites-table2" &&
      experiment != "multispace-m2")
    throw std::invalid_argument("config: unknown experiment id '" +
                                experiment + "'");
  if (seeds.empty()) throw std::invalid_argument("config: seeds non-empty");
  if (out_dir.empty()) throw std::invalid_argument("config: out_dir required");
  for (const auto& mode : lambda_modes)
    if (mode != "fixed" && mode != "adapted")
      throw std::invalid_argument("config: bad lambda mode '" + mode + "'");
  for (const auto& f : families) objectives::family_from_string(f);
  for (const auto& s : strengths) spriteworld::strength_from_string(s);
  if (experiment == "numerical-fig2" && dims.empty())
    throw std::invalid_argument("config: dims non-empty");
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["schema"] = "dissl.experiment_config/1";
  j["experiment"] = experiment;
  j["seeds"] = seeds;
  j["out_dir"] = out_dir;
  j["dims"] = dims;
  j["strengths"] = strengths;
  j["lambda_modes"] = lambda_modes;
  j["families"] = families;
  j["steps"] = steps;
  j["batch_size"] = batch_size;
  j["lr"] = lr;
  j["hidden"] = hidden;
  j["repr_dim"] = repr_dim;
  j["space_dims"] = space_dims;
  j["eta"] = eta;
  j["epsilon"] = epsilon;
  j["cadence"] = cadence;
  j["dataset_size"] = dataset_size;
  j["stride"] = stride;
  j["mixing_depth"] = mixing_depth;
  j["eval_train"] = eval_train;
  j["eval_test"] = eval_test;
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.contains("schema") &&
      j.at("schema").get<std::string>() != "dissl.experiment_config/1")
    throw std::invalid_argument("config: unexpected schema tag");
  ExperimentConfig c;
  c.experiment = j.at("experiment").get<std::string>();
  auto opt = [&j](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  opt("seeds", c.seeds);
  opt("out_dir", c.out_dir);
  opt("dims", c.dims);
  opt("strengths", c.strengths);
  opt("lambda_modes", c.lambda_modes);
  opt("families", c.families);
  opt("steps", c.steps);
  opt("batch_size", c.batch_size);
  opt("lr", c.lr);
  opt("hidden", c.hidden);
  opt("repr_dim", c.repr_dim);
  opt("space_dims", c.space_dims);
  opt("eta", c.eta);
  opt("epsilon", c.epsilon);
  opt("cadence", c.cadence);
  opt("dataset_size", c.dataset_size);
  opt("stride", c.stride);
  opt("mixing_depth", c.mixing_depth);
  opt("eval_train", c.eval_train);
  opt("eval_test", c.eval_test);
  c.resolve();
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  return from_json(read_file(path));
}

// ---- result table -----------------------------------------------------------

bool ResultTable::complete() const {
  return std::all_of(rows.begin(), rows.end(),
                     [](const ResultRow& r) { return r.ok; });
}

std::string ResultTable::to_json() const {
  json j;
  j["schema"] = "dissl.result_table/1";
  j["key_columns"] = key_columns;
  j["value_columns"] = value_columns;
  j["avg_column"] = avg_column;
  j["avg_of"] = avg_of;
  json rows_j = json::array();
  for (const auto& row : rows) {
    json r;
    r["key"] = row.key;
    r["values"] = row.values;
    r["ok"] = row.ok;
    r["error"] = row.error;
    rows_j.push_back(std::move(r));
  }
  j["rows"] = std::move(rows_j);
  return j.dump(2);
}

ResultTable ResultTable::from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.at("schema").get<std::string>() != "dissl.result_table/1")
    throw std::invalid_argument("result table: unexpected schema tag");
  ResultTable t;
  t.key_columns = j.at("key_columns").get<std::vector<std::string>>();
  t.value_columns = j.at("value_columns").get<std::vector<std::string>>();
  t.avg_column = j.at("avg_column").get<std::string>();
  t.avg_of = j.at("avg_of").get<std::vector<std::string>>();
  for (const auto& rj : j.at("rows")) {
    ResultRow row;
    row.key = rj.at("key").get<std::map<std::string, std::string>>();
    row.values = rj.at("values").get<std::map<std::string, double>>();
    row.ok = rj.at("ok").get<bool>();
    row.error = rj.at("error").get<std::string>();
    t.rows.push_back(std::move(row));
  }
  return t;
}

namespace {

void check_averages(const ResultTable& table) {
  if (table.avg_column.empty()) return;
  for (const auto& row : table.rows) {
    if (!row.ok) continue;
    double sum = 0.0;
    for (const auto& col : table.avg_of) sum += row.values.at(col);
    const double recomputed = sum / static_cast<double>(table.avg_of.size());
    if (std::abs(recomputed - row.values.at(table.avg_column)) > 1e-9)
      throw std::logic_error("result table: stored average disagrees with "
                             "recomputation");
  }
}

}  // namespace

std::string emit_table(const ResultTable& table, const std::string& format,
                       bool allow_partial) {
  if (format != "csv" && format != "markdown")
    throw std::invalid_argument("emit_table: format must be csv or markdown");
  if (!table.complete() && !allow_partial)
    throw std::runtime_error(
        "emit_table: incomplete grid (pass --allow-partial to emit anyway)");
  check_averages(table);

  const bool md = format == "markdown";
  std::ostringstream out;
  auto emit_row = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (md) out << "| ";
      out << cells[i];
      out << (md ? " " : "");
      if (!md && i + 1 < cells.size()) out << ",";
    }
    if (md) out << "|";
    out << "\n";
  };

  std::vector<std::string> header = table.key_columns;
  header.insert(header.end(), table.value_columns.begin(),
                table.value_columns.end());
  header.push_back("status");
  emit_row(header);
  if (md) {
    std::vector<std::string> rule(header.size(), "---");
    emit_row(rule);
  }
  for (const auto& row : table.rows) {
    std::vector<std::string> cells;
    for (const auto& k : table.key_columns) cells.push_back(row.key.at(k));
    for (const auto& v : table.value_columns)
      cells.push_back(row.ok ? format_number(row.values.at(v)) : "");
    cells.push_back(row.ok ? "ok" : "failed: " + row.error);
    emit_row(cells);
  }
  return out.str();
}

std::string aggregate_csv(const ResultTable& table) {
  // group rows by all key columns except the seed; mean +- sd over seeds
  std::vector<std::string> group_cols;
  for (const auto& k : table.key_columns)
    if (k != "seed") group_cols.push_back(k);

  std::vector<std::pair<std::string, std::vector<const ResultRow*>>> groups;
  for (const auto& row : table.rows) {
    if (!row.ok) continue;
    std::string gk;
    for (const auto& k : group_cols) gk += row.key.at(k) + "\x1f";
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return g.first == gk; });
    if (it == groups.end()) {
      groups.push_back({gk, {&row}});
    } else {
      it->second.push_back(&row);
    }
  }

  std::ostringstream out;
  for (std::size_t i = 0; i < group_cols.size(); ++i)
    out << group_cols[i] << ",";
  out << "n_seeds";
  for (const auto& v : table.value_columns)
    out << "," << v << "_mean," << v << "_sd";
  out << "\n";
  for (const auto& [gk, members] : groups) {
    for (const auto& k : group_cols) out << members.front()->key.at(k) << ",";
    out << members.size();
    for (const auto& v : table.value_columns) {
      double mean = 0.0;
      for (const auto* row : members) mean += row->values.at(v);
      mean /= static_cast<double>(members.size());
      double sd = 0.0;
      if (members.size() > 1) {
        for (const auto* row : members) {
          const double d = row->values.at(v) - mean;
          sd += d * d;
        }
        sd = std::sqrt(sd / static_cast<double>(members.size() - 1));
      }
      out << "," << format_number(mean) << "," << format_number(sd);
    }
    out << "\n";
  }
  return out.str();
}

std::string fig2_plot_svg(const ResultTable& table) {
  // mean r2 per (dim, lambda mode), one polyline per (lambda mode, target)
  std::map<std::pair<std::string, int>, std::map<std::string, double>> means;
  std::map<std::pair<std::string, int>, int> counts;
  std::vector<int> dims;
  for (const auto& row : table.rows) {
    if (!row.ok) continue;
    const int dim = std::stoi(row.key.at("dim"));
    const auto k = std::make_pair(row.key.at("lambda"), dim);
    for (const auto& col : {"content_r2", "style_r2"})
      means[k][col] += row.values.at(col);
    counts[k] += 1;
    if (std::find(dims.begin(), dims.end(), dim) == dims.end())
      dims.push_back(dim);
  }
  std::sort(dims.begin(), dims.end());
  for (auto& [k, vals] : means)
    for (auto& [_, v] : vals) v /= counts[k];

  const double w = 480, h = 360, ml = 60, mr = 20, mt = 30, mb = 50;
  const double x0 = dims.empty() ? 0 : dims.front();
  const double x1 = dims.empty() || dims.back() == x0 ? x0 + 1 : dims.back();
  auto px = [&](double d) { return ml + (d - x0) / (x1 - x0) * (w - ml - mr); };
  auto py = [&](double r) { return h - mb - r * (h - mt - mb); };

  std::ostringstream svg;
  svg.precision(6);
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w
      << "' height='" << h << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n"
      << "<line x1='" << ml << "' y1='" << py(0) << "' x2='" << w - mr
      << "' y2='" << py(0) << "' stroke='black'/>\n"
      << "<line x1='" << ml << "' y1='" << py(0) << "' x2='" << ml << "' y2='"
      << mt << "' stroke='black'/>\n";
  for (double r = 0.0; r <= 1.001; r += 0.25)
    svg << "<text x='" << ml - 8 << "' y='" << py(r) + 4
        << "' font-size='11' text-anchor='end'>" << r << "</text>\n";
  for (int d : dims)
    svg << "<text x='" << px(d) << "' y='" << h - mb + 18
        << "' font-size='11' text-anchor='middle'>" << d << "</text>\n";
  svg << "<text x='" << (ml + w - mr) / 2 << "' y='" << h - 12
      << "' font-size='12' text-anchor='middle'>embedding dimension</text>\n"
      << "<text x='16' y='" << (mt + h - mb) / 2
      << "' font-size='12' text-anchor='middle' transform='rotate(-90 16 "
      << (mt + h - mb) / 2 << ")'>readout r2</text>\n";

  const std::map<std::string, std::string> colors{
      {"fixed/content_r2", "#1f77b4"},
      {"fixed/style_r2", "#ff7f0e"},
      {"adapted/content_r2", "#2ca02c"},
      {"adapted/style_r2", "#d62728"}};
  double legend_y = mt + 6;
  for (const auto& [name, color] : colors) {
    const auto slash = name.find('/');
    const std::string mode = name.substr(0, slash);
    const std::string target = name.substr(slash + 1);
    std::ostringstream points;
    bool any = false;
    for (int d : dims) {
      const auto it = means.find({mode, d});
      if (it == means.end()) continue;
      points << px(d) << "," << py(it->second.at(target)) << " ";
      any = true;
    }
    if (!any) continue;
    svg << "<polyline fill='none' stroke='" << color << "' stroke-width='2' "
        << "points='" << points.str() << "'/>\n";
    svg << "<text x='" << w - mr - 150 << "' y='" << legend_y
        << "' font-size='11' fill='" << color << "'>" << mode << " "
        << (target == "content_r2" ? "content" : "style") << "</text>\n";
    legend_y += 14;
  }
  svg << "</svg>\n";
  return svg.str();
}

// ---- grid cells -------------------------------------------------------------

namespace {

struct CellOutput {
  std::map<std::string, double> values;
  std::string checkpoint_json;
  std::string history_csv;
  std::string report_json;
};

struct CellSpec {
  std::string id;
  std::map<std::string, std::string> key;
  std::function<CellOutput()> run;
};

TrainConfig base_train_config(const ExperimentConfig& c,
                              const std::string& lambda_mode,
                              const std::string& family, std::uint64_t seed) {
  TrainConfig tc;
  tc.family = objectives::family_from_string(family);
  tc.lambda_policy = lambda_mode == "adapted" ? LambdaPolicy::kAdapted
                                              : LambdaPolicy::kFixed;
  tc.batch_size = c.batch_size;
  tc.steps = c.steps;
  tc.lr = c.lr;
  tc.seed = seed;
  tc.encoder.hidden = c.hidden;
  tc.encoder.repr_dim = c.repr_dim;
  tc.eta = c.eta;
  tc.epsilon = c.epsilon;
  tc.cadence = c.cadence;
  return tc;
}

CellOutput run_fig2_cell(const ExperimentConfig& c, int dim,
                         const std::string& lambda_mode, std::uint64_t seed) {
  latentlab::LatentSpec spec;
  spec.d0 = 5;
  spec.style_dims = {5};
  auto params = latentlab::GaussianLVMParams::standard(
      spec, latentlab::StyleMode::kShift);
  // like the sprite datasets, the mixing is part of the dataset and fixed
  // across training seeds
  RngStream world_rng = RngStream(1234).split(101);
  auto mixing =
      latentlab::build_mixing(spec.total(), c.mixing_depth, world_rng);
  trainkit::LatentPairSource source(params, mixing);

  // single embedding space: all pairs are mode 0 and the style-space terms
  // drop out, so the objective is the plain contrastive loss whose excess
  // capacity can absorb style
  TrainConfig tc = base_train_config(c, lambda_mode, "simclr-euclid", seed);
  tc.space_dims = {dim};
  RngStream train_rng(seed);
  auto result = trainkit::train(tc, source, train_rng);

  RngStream eval_rng = RngStream(seed).split(202);
  const auto train_data = source.eval_data(c.eval_train, eval_rng);
  const auto test_data = source.eval_data(c.eval_test, eval_rng);
  const auto report =
      trainkit::identifiability_report(result.model, train_data, test_data,
                                       /*nonlinear=*/true);

  CellOutput out;
  out.values["content_r2"] = report.r2(0, 0);
  out.values["style_r2"] = report.r2(0, 1);
  out.values["avg_r2"] = 0.5 * (report.r2(0, 0) + report.r2(0, 1));
  out.checkpoint_json = trainkit::save_checkpoint(result.model, tc);
  out.history_csv = result.history.csv();
  out.report_json = report.to_json();
  return out;
}

CellOutput run_table2_cell(const ExperimentConfig& c,
                           const std::string& strength,
                           const std::string& lambda_mode,
                           const std::string& family, std::uint64_t seed) {
  // standard two-view SSL: one transform group containing every atomic kind
  spriteworld::TransformGroups groups{{
      spriteworld::TransformKind::kColorJitter,
      spriteworld::TransformKind::kRotation,
      spriteworld::TransformKind::kRescale,
      spriteworld::TransformKind::kTranslate,
  }};
  trainkit::SpritePairSource source(
      c.dataset_size, groups, spriteworld::strength_from_string(strength),
      /*dataset_seed=*/1234, c.stride);

  TrainConfig tc = base_train_config(c, lambda_mode, family, seed);
  tc.space_dims = c.space_dims;
  RngStream train_rng(seed);
  auto result = trainkit::train(tc, source, train_rng);

  RngStream eval_rng = RngStream(seed).split(202);
  const auto train_data = source.eval_data(c.eval_train, eval_rng);
  const auto test_data = source.eval_data(c.eval_test, eval_rng);
  // Table layout probes the content space only
  std::vector<trainkit::SpaceEncoder> spaces{
      [&result](const Mat& x) { return trainkit::forward(result.model, x).z[0]; }};
  const auto report = trainkit::identifiability_report(spaces, train_data,
                                                       test_data,
                                                       /*nonlinear=*/false);

  CellOutput out;
  double style_sum = 0.0;
  for (int t = 0; t < 6; ++t) {
    const std::string name = train_data.target_names[t] + "_r2";
    out.values[name] = report.r2(0, t);
    if (train_data.target_names[t] != "shape") style_sum += report.r2(0, t);
  }
  out.values["style_avg_r2"] = style_sum / 5.0;
  out.checkpoint_json = trainkit::save_checkpoint(result.model, tc);
  out.history_csv = result.history.csv();
  out.report_json = report.to_json();
  return out;
}

CellOutput run_m2_cell(const ExperimentConfig& c,
                       const std::string& lambda_mode,
                       const std::string& family, std::uint64_t seed) {
  trainkit::SpritePairSource source(
      c.dataset_size, spriteworld::default_groups_m2(),
      spriteworld::Strength::kMedium, /*dataset_seed=*/1234, c.stride);

  TrainConfig tc = base_train_config(c, lambda_mode, family, seed);
  tc.space_dims = c.space_dims;
  RngStream train_rng(seed);
  auto result = trainkit::train(tc, source, train_rng);

  RngStream eval_rng = RngStream(seed).split(202);
  const auto train_data = source.eval_data(c.eval_train, eval_rng);
  const auto test_data = source.eval_data(c.eval_test, eval_rng);
  const auto report =
      trainkit::identifiability_report(result.model, train_data, test_data,
                                       /*nonlinear=*/false);

  auto col = [&](const std::string& name) {
    const auto it = std::find(train_data.target_names.begin(),
                              train_data.target_names.end(), name);
    return static_cast<int>(it - train_data.target_names.begin());
  };
  CellOutput out;
  out.values["z0_shape_r2"] = report.r2(0, col("shape"));
  out.values["z1_color_r2"] = report.r2(1, col("color"));
  out.values["z2_orientation_r2"] = report.r2(2, col("orientation"));
  out.values["z1_orientation_r2"] = report.r2(1, col("orientation"));
  out.values["z2_color_r2"] = report.r2(2, col("color"));
  out.values["diag_avg_r2"] =
      (out.values["z0_shape_r2"] + out.values["z1_color_r2"] +
       out.values["z2_orientation_r2"]) /
      3.0;
  out.checkpoint_json = trainkit::save_checkpoint(result.model, tc);
  out.history_csv = result.history.csv();
  out.report_json = report.to_json();
  return out;
}

std::vector<CellSpec> build_cells(const ExperimentConfig& c,
                                  ResultTable& table) {
  std::vector<CellSpec> cells;
  if (c.experiment == "numerical-fig2") {
    table.key_columns = {"dim", "lambda", "seed"};
    table.value_columns = {"content_r2", "style_r2", "avg_r2"};
    table.avg_column = "avg_r2";
    table.avg_of = {"content_r2", "style_r2"};
    for (int dim : c.dims)
      for (const auto& mode : c.lambda_modes)
        for (std::uint64_t seed : c.seeds) {
          CellSpec cell;
          cell.id = "dim" + std::to_string(dim) + "_" + mode + "_seed" +
                    std::to_string(seed);
          cell.key = {{"dim", std::to_string(dim)},
                      {"lambda", mode},
                      {"seed", std::to_string(seed)}};
          cell.run = [&c, dim, mode, seed] {
            return run_fig2_cell(c, dim, mode, seed);
          };
          cells.push_back(std::move(cell));
        }
  } else if (c.experiment == "sprites-table2") {
    table.key_columns = {"family", "strength", "lambda", "seed"};
    table.value_columns = {"shape_r2",       "color_r2", "scale_r2",
                           "orientation_r2", "pos_x_r2", "pos_y_r2",
                           "style_avg_r2"};
    table.avg_column = "style_avg_r2";
    table.avg_of = {"color_r2", "scale_r2", "orientation_r2", "pos_x_r2",
                    "pos_y_r2"};
    for (const auto& family : c.families)
      for (const auto& strength : c.strengths)
        for (const auto& mode : c.lambda_modes)
          for (std::uint64_t seed : c.seeds) {
            CellSpec cell;
            cell.id = family + "_" + strength + "_" + mode + "_seed" +
                      std::to_string(seed);
            cell.key = {{"family", family},
                        {"strength", strength},
                        {"lambda", mode},
                        {"seed", std::to_string(seed)}};
            cell.run = [&c, strength, mode, family, seed] {
              return run_table2_cell(c, strength, mode, family, seed);
            };
            cells.push_back(std::move(cell));
          }
  } else {  // multispace-m2
    table.key_columns = {"family", "lambda", "seed"};
    table.value_columns = {"z0_shape_r2",       "z1_color_r2",
                           "z2_orientation_r2", "z1_orientation_r2",
                           "z2_color_r2",       "diag_avg_r2"};
    table.avg_column = "diag_avg_r2";
    table.avg_of = {"z0_shape_r2", "z1_color_r2", "z2_orientation_r2"};
    for (const auto& family : c.families)
      for (const auto& mode : c.lambda_modes)
        for (std::uint64_t seed : c.seeds) {
          CellSpec cell;
          cell.id = family + "_" + mode + "_seed" + std::to_string(seed);
          cell.key = {{"family", family},
                      {"lambda", mode},
                      {"seed", std::to_string(seed)}};
          cell.run = [&c, mode, family, seed] {
            return run_m2_cell(c, mode, family, seed);
          };
          cells.push_back(std::move(cell));
        }
  }
  return cells;
}

/// Runs one cell and persists its artifacts; returns true on success.
bool execute_cell(const CellSpec& cell, const std::string& cell_dir) {
  fs::create_directories(cell_dir);
  try {
    const CellOutput out = cell.run();
    json values;
    values["id"] = cell.id;
    values["key"] = cell.key;
    values["values"] = out.values;
    write_file(cell_dir + "/values.json", values.dump(2));
    write_file(cell_dir + "/checkpoint.json", out.checkpoint_json);
    write_file(cell_dir + "/history.csv", out.history_csv);
    write_file(cell_dir + "/report.json", out.report_json);
    return true;
  } catch (const std::exception& e) {
    json err;
    err["id"] = cell.id;
    err["error"] = e.what();
    write_file(cell_dir + "/error.json", err.dump(2));
    return false;
  }
}

}  // namespace

ResultTable run_experiment(const ExperimentConfig& raw_config, int jobs) {
  ExperimentConfig config = raw_config;
  config.resolve();
  config.validate();
  if (jobs < 1) throw std::invalid_argument("run_experiment: jobs >= 1");

  fs::create_directories(config.out_dir + "/cells");
  write_file(config.out_dir + "/config_resolved.json", config.to_json());

  ResultTable table;
  const std::vector<CellSpec> cells = build_cells(config, table);

  if (jobs == 1) {
    for (const auto& cell : cells)
      execute_cell(cell, config.out_dir + "/cells/" + cell.id);
  } else {
    // worker processes, at most `jobs` in flight
    std::vector<pid_t> running;
    auto reap_one = [&running] {
      int status = 0;
      const pid_t done = waitpid(-1, &status, 0);
      running.erase(std::remove(running.begin(), running.end(), done),
                    running.end());
    };
    for (const auto& cell : cells) {
      while (static_cast<int>(running.size()) >= jobs) reap_one();
      const pid_t pid = fork();
      if (pid < 0) throw std::runtime_error("run_experiment: fork failed");
      if (pid == 0) {
        const bool ok =
            execute_cell(cell, config.out_dir + "/cells/" + cell.id);
        _exit(ok ? 0 : 1);
      }
      running.push_back(pid);
    }
    while (!running.empty()) reap_one();
  }

  // single-threaded reduce over the persisted cell outputs
  for (const auto& cell : cells) {
    const std::string cell_dir = config.out_dir + "/cells/" + cell.id;
    ResultRow row;
    row.key = cell.key;
    if (fs::exists(cell_dir + "/values.json")) {
      const json v = json::parse(read_file(cell_dir + "/values.json"));
      row.values = v.at("values").get<std::map<std::string, double>>();
      row.ok = true;
    } else if (fs::exists(cell_dir + "/error.json")) {
      row.error = json::parse(read_file(cell_dir + "/error.json"))
                      .at("error")
                      .get<std::string>();
    } else {
      row.error = "worker produced no output";
    }
    table.rows.push_back(std::move(row));
  }

  write_file(config.out_dir + "/result.json", table.to_json());
  write_file(config.out_dir + "/result.csv",
             emit_table(table, "csv", /*allow_partial=*/true));
  write_file(config.out_dir + "/aggregate.csv", aggregate_csv(table));
  if (config.experiment == "numerical-fig2")
    write_file(config.out_dir + "/plot.svg", fig2_plot_svg(table));
  return table;
}

ResultTable load_results(const std::string& run_dir) {
  return ResultTable::from_json(read_file(run_dir + "/result.json"));
}

}  // namespace dissl::expcli
