// mgw: command-line front-end for the UMGW solver, barycenters, transfer
// operators, invariant checks and synthetic data.

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "mgw/barycenter.hpp"
#include "mgw/checks.hpp"
#include "mgw/fixtures.hpp"
#include "mgw/io.hpp"
#include "mgw/oracle.hpp"
#include "mgw/parallel.hpp"
#include "mgw/transfer.hpp"
#include "params.hpp"

namespace fs = std::filesystem;
using namespace mgw;
using mgw::cli::ConfigError;
using mgw::cli::json;
using mgw::cli::Kind;
using mgw::cli::Param;

namespace {

constexpr int kExitSolver = 1;
constexpr int kExitInput = 2;

std::vector<Param> solver_params(double eps, int innerIter) {
  return {
      {"eps", Kind::Real, eps, "entropic regularization"},
      {"reference", Kind::Text, "counting", "entropy reference: counting or product"},
      {"outer-iter", Kind::Integer, 50, "outer alternation iterations"},
      {"outer-tol", Kind::Real, 1e-7, "relative outer stopping tolerance"},
      {"inner-iter", Kind::Integer, innerIter, "Sinkhorn sweep cap per half step"},
      {"inner-tol", Kind::Real, 1e-7, "Sinkhorn drift tolerance (relative to eps)"},
      {"eps-stages", Kind::Integer, 0, "eps-scaling stages per Sinkhorn solve (0 = off)"},
      {"eps-factor", Kind::Real, 0.5, "eps-scaling factor per stage"},
  };
}

std::vector<Param> common_params(const std::string& out) {
  return {
      {"out", Kind::Text, out, "output directory"},
      {"threads", Kind::Integer, 0, "worker threads (0 = MGW_THREADS or hardware)"},
  };
}

std::vector<Param> join(std::vector<Param> a, const std::vector<Param>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

UmgwOptions umgw_options(const json& c) {
  UmgwOptions o;
  o.outerIter = c["outer-iter"].get<int>();
  o.outerTol = c["outer-tol"].get<double>();
  o.inner.maxIter = c["inner-iter"].get<int>();
  o.inner.tolerance = c["inner-tol"].get<double>();
  o.inner.epsStages = c["eps-stages"].get<int>();
  o.inner.epsFactor = c["eps-factor"].get<double>();
  if (o.outerIter < 1 || o.inner.maxIter < 1) throw ConfigError("iteration counts must be positive");
  if (!(o.outerTol >= 0.0) || !(o.inner.tolerance > 0.0)) throw ConfigError("tolerances must be positive");
  return o;
}

ReferenceMeasure::Kind reference_kind(const json& c) {
  return ReferenceMeasure::parse_kind(c["reference"].get<std::string>());
}

DistanceNormalization normalization(const json& c) {
  const auto s = c["normalization"].get<std::string>();
  if (s == "support") return DistanceNormalization::Support;
  if (s == "full-grid") return DistanceNormalization::FullGrid;
  throw ConfigError("--normalization must be 'support' or 'full-grid'");
}

std::vector<std::string> required_list(const json& c, const std::string& key, std::size_t minimum) {
  if (c[key].is_null()) throw ConfigError("--" + key + " is required");
  auto v = c[key].get<std::vector<std::string>>();
  if (v.size() < minimum) {
    throw ConfigError("--" + key + " needs at least " + std::to_string(minimum) + " entries");
  }
  return v;
}

/// One penalty for all nodes or one per node.
std::vector<MarginalPenalty> penalties(const json& c, std::size_t n) {
  const auto texts = c["penalty"].get<std::vector<std::string>>();
  if (texts.size() != 1 && texts.size() != n) {
    throw ConfigError("--penalty takes one value or one per input");
  }
  std::vector<MarginalPenalty> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(MarginalPenalty::parse(texts.size() == 1 ? texts[0] : texts[i]));
  return out;
}

fs::path prepare_out(const json& c) {
  const fs::path out = c["out"].get<std::string>();
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create output directory " + out.string() + ": " + ec.message());
  return out;
}

void write_json(const fs::path& p, const json& j) { io::write_text(p, j.dump(2) + "\n"); }

std::string csv_name(const std::string& stem, int i) { return stem + "_" + std::to_string(i) + ".csv"; }

/// Integer grid coordinates when every point has them.
bool grid_shape(const std::vector<const MmSpace*>& spaces, int& h, int& w) {
  h = w = 0;
  for (const MmSpace* s : spaces) {
    const Matrix& xy = s->coords();
    if (xy.rows() != s->size() || xy.cols() < 2) return false;
    for (Eigen::Index a = 0; a < xy.rows(); ++a) {
      if (xy(a, 0) != std::round(xy(a, 0)) || xy(a, 1) != std::round(xy(a, 1)) || xy(a, 0) < 0 || xy(a, 1) < 0) {
        return false;
      }
      h = std::max(h, static_cast<int>(xy(a, 0)) + 1);
      w = std::max(w, static_cast<int>(xy(a, 1)) + 1);
    }
  }
  return h > 0 && w > 0;
}

json trace_summary(const UmgwResult& r) {
  return {{"iterations", r.iterations},
          {"converged", r.converged},
          {"objective", r.objectiveTrace.empty() ? 0.0 : r.objectiveTrace.back()},
          {"objective_offset", r.objectiveOffset},
          {"marginal_mismatch", r.marginalMismatch}};
}

// ---------------------------------------------------------------------------

std::vector<Param> umgw_params() {
  return join(join({{"inputs", Kind::TextList, nullptr, "mm-space directories or images, one per node"},
                    {"tree", Kind::Text, "chain", "chain, star (last node is the hub) or a tree JSON file"},
                    {"penalty", Kind::TextList, json::array({"balanced"}), "balanced, free or kl:LAMBDA (one or per node)"},
                    {"balanced", Kind::Flag, false, "shorthand for --penalty balanced"},
                    {"threshold", Kind::Real, 0.0, "image threshold"},
                    {"normalization", Kind::Text, "support", "image distances: support or full-grid"},
                    {"oracle", Kind::Flag, false, "rerun with the dense oracle and report deltas"}},
                   solver_params(1e-3, 2000)),
              common_params("mgw_umgw"));
}

int cmd_umgw(const json& c) {
  const auto inputs = required_list(c, "inputs", 2);
  UmgwProblem p;
  for (const auto& path : inputs) {
    p.spaces.push_back(io::read_mmspace(path, c["threshold"].get<double>(), normalization(c)));
  }
  const auto sizes = p.sizes();
  const auto treeName = c["tree"].get<std::string>();
  if (treeName == "chain") {
    p.tree = chain_tree(sizes);
  } else if (treeName == "star") {
    std::vector<TreeEdge> edges;
    for (int i = 0; i + 1 < static_cast<int>(sizes.size()); ++i) edges.push_back({i, static_cast<int>(sizes.size()) - 1, 1.0});
    p.tree = CostTree(static_cast<int>(sizes.size()), edges, sizes);
  } else {
    p.tree = io::read_tree_json(treeName);
    if (p.tree.n_nodes() != static_cast<int>(sizes.size())) throw ConfigError("tree node count differs from the input count");
    p.tree.set_node_sizes(sizes);
  }
  p.penalties = c["balanced"].get<bool>() ? std::vector<MarginalPenalty>(sizes.size(), MarginalPenalty::balanced())
                                          : penalties(c, sizes.size());
  p.eps = c["eps"].get<double>();
  p.reference = reference_kind(c);
  p.validate();
  const UmgwOptions o = umgw_options(c);
  const fs::path out = prepare_out(c);

  const auto t0 = std::chrono::steady_clock::now();
  const UmgwResult r = solve_umgw(p, o);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  for (int i = 0; i < r.pi.n_nodes(); ++i) io::write_csv_vector(out / csv_name("node_marginal", i), r.pi.node_marginal(i));
  for (const auto& e : p.tree.edges()) {
    io::write_csv_matrix(out / ("edge_marginal_" + std::to_string(e.i) + "_" + std::to_string(e.j) + ".csv"),
                         r.pi.edge_marginal(e.i, e.j));
  }
  io::write_text(out / "objective_trace.csv", objective_trace_csv(r));
  const TightnessReport t = tightness_report(p, r);
  write_json(out / "tightness.json", {{"gap_pi_pi", t.gapPiPi},
                                      {"gap_gamma_gamma", t.gapGammaGamma},
                                      {"fbi", t.fbi},
                                      {"f_pi_pi", t.fPiPi},
                                      {"f_gamma_gamma", t.fGammaGamma},
                                      {"balanced", t.balanced}});
  json pens = json::array();
  for (const auto& pen : p.penalties) pens.push_back(pen.to_string());
  json meta = trace_summary(r);
  meta["eps"] = p.eps;
  meta["penalties"] = pens;
  meta["tree"] = json::parse(io::tree_json(p.tree));
  meta["sizes"] = sizes;
  meta["seconds"] = seconds;
  write_json(out / "metadata.json", meta);
  std::printf("umgw: %d iterations, converged %s, objective %.12g (%.2f s)\n", r.iterations,
              r.converged ? "yes" : "no", meta["objective"].get<double>(), seconds);

  if (c["oracle"].get<bool>()) {
    const DenseUmgwResult d = dense_umgw(p, o);
    const double planDelta = (dense_from_factors(r.pi).tensor - d.pi.tensor).cwiseAbs().maxCoeff();
    double traceDelta = 0.0;
    const std::size_t common = std::min(d.objectiveTrace.size(), r.objectiveTrace.size());
    for (std::size_t k = 0; k < common; ++k) {
      traceDelta = std::max(traceDelta, std::abs(d.objectiveTrace[k] - (r.objectiveTrace[k] + r.objectiveOffset)));
    }
    write_json(out / "oracle_delta.json", {{"max_plan_delta", planDelta},
                                           {"max_objective_delta", traceDelta},
                                           {"compared_half_steps", common},
                                           {"oracle_iterations", d.iterations}});
    std::printf("oracle: max |delta plan| %.3g, max |delta objective| %.3g\n", planDelta, traceDelta);
  }
  return 0;
}

// ---------------------------------------------------------------------------

std::vector<Param> barycenter_params() {
  return join(join({{"inputs", Kind::TextList, nullptr, "input mm-space directories or images"},
                    {"support", Kind::Text, "", "support mm-space (default: union of the image inputs)"},
                    {"rho", Kind::RealList, json::array(), "barycenter weights (default uniform)"},
                    {"penalty", Kind::TextList, json::array({"balanced"}), "phi_i: balanced or kl:LAMBDA"},
                    {"threshold", Kind::Real, 0.0, "image threshold"},
                    {"normalization", Kind::Text, "full-grid", "image distances: support or full-grid"},
                    {"beta", Kind::Real, nullptr, "label weight; enables the fused barycenter"},
                    {"label-exponent", Kind::Real, 2.0, "exponent on the label metric"},
                    {"support-labels", Kind::Text, "", "label of every support point (fused)"},
                    {"loss-curve", Kind::Flag, false, "evaluate the barycentric loss after every iteration"},
                    {"loss-inner-tol", Kind::Real, 1e-5, "inner tolerance of the loss evaluations"},
                    {"loss-outer-iter", Kind::Integer, 10, "outer iterations of the loss evaluations"}},
                   solver_params(1e-3, 2000)),
              common_params("mgw_barycenter"));
}

Matrix label_colors(Eigen::Index n) {
  static const double palette[][3] = {{0.90, 0.16, 0.16}, {0.16, 0.45, 0.90}, {0.20, 0.75, 0.25}, {0.95, 0.75, 0.10},
                                      {0.60, 0.25, 0.80}, {0.10, 0.80, 0.80}, {0.95, 0.50, 0.10}, {0.55, 0.55, 0.55}};
  Matrix m(n, 3);
  for (Eigen::Index k = 0; k < n; ++k)
    for (int c = 0; c < 3; ++c) m(k, c) = palette[k % 8][c];
  return m;
}

int cmd_barycenter(const json& c) {
  const auto inputs = required_list(c, "inputs", 1);
  const bool fused = !c["beta"].is_null();
  BarycenterSpec s;
  std::vector<Matrix> images;
  for (const auto& path : inputs) {
    if (fused) {
      s.labelledInputs.push_back(io::read_labelled_mmspace(path));
      s.inputs.push_back(s.labelledInputs.back().base());
    } else if (io::is_image_file(path)) {
      images.push_back(io::read_image(path));
      s.inputs.push_back(image_to_mmspace(images.back(), c["threshold"].get<double>(), normalization(c)).with_name(path));
    } else {
      s.inputs.push_back(io::read_mmspace(path));
    }
  }
  const auto supportPath = c["support"].get<std::string>();
  if (!supportPath.empty()) {
    s.support = io::read_mmspace(supportPath, c["threshold"].get<double>(), normalization(c));
  } else if (images.size() == inputs.size()) {
    for (const auto& im : images) {
      if (im.rows() != images[0].rows() || im.cols() != images[0].cols()) {
        throw ConfigError("images differ in size; pass --support");
      }
    }
    s.support = union_support(images, c["threshold"].get<double>());
  } else {
    throw ConfigError("--support is required unless all inputs are images");
  }
  s.rho = c["rho"].get<std::vector<double>>();
  if (s.rho.empty()) s.rho.assign(inputs.size(), 1.0 / static_cast<double>(inputs.size()));
  s.eps = c["eps"].get<double>();
  s.inputPenalties = penalties(c, inputs.size());
  s.reference = reference_kind(c);
  if (fused) {
    const auto labelPath = c["support-labels"].get<std::string>();
    if (labelPath.empty()) throw ConfigError("--support-labels is required with --beta");
    s.supportLabels = io::read_csv_ints(labelPath);
  }
  s.validate();
  const UmgwOptions o = umgw_options(c);
  const fs::path out = prepare_out(c);

  // per-iteration snapshots for the loss curve
  std::vector<Vector> hubs;
  std::vector<std::vector<Matrix>> couplings;
  std::vector<double> objectives, stamps;
  const auto t0 = std::chrono::steady_clock::now();
  const bool curve = c["loss-curve"].get<bool>();
  UmgwObserver observer;
  const int hub = static_cast<int>(inputs.size());
  if (curve) {
    observer = [&](int, const UmgwResult& r) {
      hubs.push_back(r.pi.node_marginal(hub));
      couplings.push_back(hub_couplings(r.pi));
      objectives.push_back(r.objectiveTrace.back());
      stamps.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    };
  }

  UmgwResult result;
  Vector measure;
  std::optional<LabelledMmSpace> labelled;
  if (fused) {
    FusedConfig fc{c["beta"].get<double>(), c["label-exponent"].get<double>()};
    auto fb = fused_fixed_support_barycenter(s, fc, o);
    result = std::move(fb.result);
    measure = fb.barycenter.base().weights();
    labelled = fb.barycenter;
  } else {
    auto b = fixed_support_barycenter(s, o, observer);
    result = std::move(b.result);
    measure = b.barycenter.weights();
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  io::write_csv_vector(out / "barycenter.csv", measure);
  io::write_text(out / "objective_trace.csv", objective_trace_csv(result));
  int h = 0, w = 0;
  const MmSpace bary = s.support.with_weights(measure);
  if (grid_shape({&bary}, h, w)) io::write_pgm(out / "barycenter.pgm", io::render_grid(measure, bary.coords(), h, w));
  if (labelled) {
    std::vector<int> lab = labelled->label_of();
    io::write_csv_vector(out / "barycenter_labels.csv", Eigen::Map<const Eigen::VectorXi>(lab.data(), lab.size()).cast<double>());
    if (h > 0) {
      // colour of each support point = average label colour of its incoming mass
      const Matrix colors = label_colors(s.labelledInputs[0].label_space()->size());
      Matrix acc = Matrix::Zero(bary.size(), 3);
      Vector mass = Vector::Zero(bary.size());
      for (int i = 0; i < hub; ++i) {
        const Matrix pm = result.pi.edge_marginal(i, hub);
        const auto& li = s.labelledInputs[i].label_of();
        for (Eigen::Index a = 0; a < pm.rows(); ++a) {
          for (Eigen::Index y = 0; y < pm.cols(); ++y) {
            acc.row(y) += pm(a, y) * colors.row(li[a]);
            mass[y] += pm(a, y);
          }
        }
      }
      const double top = measure.maxCoeff() > 0 ? measure.maxCoeff() : 1.0;
      std::array<Matrix, 3> rgb{Matrix::Zero(h, w), Matrix::Zero(h, w), Matrix::Zero(h, w)};
      for (Eigen::Index y = 0; y < bary.size(); ++y) {
        if (!(mass[y] > 0.0)) continue;
        const auto r = static_cast<Eigen::Index>(bary.coords()(y, 0)), q = static_cast<Eigen::Index>(bary.coords()(y, 1));
        for (int k = 0; k < 3; ++k) rgb[k](r, q) = acc(y, k) / mass[y] * std::min(1.0, measure[y] / top);
      }
      io::write_png_rgb(out / "barycenter_labels.png", rgb);
    }
  }

  json meta = trace_summary(result);
  meta["eps"] = s.eps;
  meta["rho"] = s.rho;
  meta["support_size"] = s.support.size();
  meta["essential_support"] = essential_support(measure).size();
  meta["seconds"] = seconds;
  if (curve) {
    UmgwOptions lo = o;
    lo.inner.tolerance = c["loss-inner-tol"].get<double>();
    lo.outerIter = c["loss-outer-iter"].get<int>();
    const auto pen = s.inputPenalties[0];
    std::ostringstream csv;
    csv << "iteration,seconds,loss,objective\n";
    csv.precision(17);
    for (std::size_t k = 0; k < hubs.size(); ++k) {
      const double loss = barycentric_loss(s.inputs, s.support.with_weights(hubs[k]), s.eps, pen, lo, &couplings[k]);
      csv << k + 1 << ',' << stamps[k] << ',' << loss << ',' << objectives[k] << '\n';
    }
    io::write_text(out / "loss_curve.csv", csv.str());
  }
  write_json(out / "metadata.json", meta);
  std::printf("barycenter: %d iterations, converged %s, %zu essential points (%.2f s)\n", result.iterations,
              result.converged ? "yes" : "no", essential_support(measure).size(), seconds);
  return 0;
}

// ---------------------------------------------------------------------------

std::vector<Param> particle_params() {
  return {{"synth", Kind::Text, "", "coherent,noise,snapshots (e.g. 10,2,3)"},
          {"grid", Kind::Integer, 32, "grid size in pixels"},
          {"seed", Kind::Integer, 7, "generator seed"},
          {"rotation", Kind::Real, 0.3, "rotation per snapshot (radians)"},
          {"drift-x", Kind::Real, 0.0, "drift per snapshot (pixels)"},
          {"drift-y", Kind::Real, 0.0, "drift per snapshot (pixels)"},
          {"blur", Kind::Real, 0.5, "Gaussian blur sigma (pixels)"},
          {"min-separation", Kind::Real, 2.0, "minimum coherent particle spacing (pixels)"},
          {"threshold", Kind::Real, 1e-5, "image threshold"}};
}

ParticleConfig particle_config(const json& c) {
  ParticleConfig pc;
  const auto text = c["synth"].get<std::string>();
  int a = 0, b = 0, n = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%d,%d,%d%c", &a, &b, &n, &tail) != 3) {
    throw ConfigError("--synth expects coherent,noise,snapshots");
  }
  pc.nCoherent = a;
  pc.nNoise = b;
  pc.nSnapshots = n;
  pc.gridSize = c["grid"].get<int>();
  pc.seed = c["seed"].get<std::uint64_t>();
  pc.rotationPerStep = c["rotation"].get<double>();
  pc.driftX = c["drift-x"].get<double>();
  pc.driftY = c["drift-y"].get<double>();
  pc.blurSigma = c["blur"].get<double>();
  pc.minSeparation = c["min-separation"].get<double>();
  pc.threshold = c["threshold"].get<double>();
  return pc;
}

std::vector<Param> transfer_params() {
  return join(join(join({{"snapshots", Kind::TextList, json::array(), "snapshot mm-space directories or images"},
                         {"kl", Kind::Real, 1e-3, "KL marginal weight lambda (0 = balanced)"},
                         {"radius", Kind::Real, 1.0, "localization radius in grid cells"},
                         {"normalization", Kind::Text, "full-grid", "image distances: support or full-grid"}},
                        particle_params()),
                   solver_params(0.2e-3, 20000)),
              common_params("mgw_transfer"));
}

int cmd_transfer(const json& c) {
  std::vector<ParticleSnapshot> snaps;
  std::vector<MmSpace> spaces;
  const bool synth = !c["synth"].get<std::string>().empty();
  if (synth) {
    snaps = synth_particles(particle_config(c));
    for (const auto& sn : snaps) spaces.push_back(sn.space);
  } else {
    const auto paths = c["snapshots"].get<std::vector<std::string>>();
    if (paths.size() < 2) throw ConfigError("transfer needs at least two --snapshots or --synth");
    for (const auto& p : paths) spaces.push_back(io::read_mmspace(p, c["threshold"].get<double>(), normalization(c)));
  }
  if (spaces.size() < 2) throw ConfigError("transfer needs at least two snapshots");
  UmgwProblem p;
  p.spaces = spaces;
  p.tree = chain_tree(p.sizes());
  const double lambda = c["kl"].get<double>();
  if (lambda < 0.0) throw ConfigError("--kl must be >= 0");
  p.penalties.assign(spaces.size(), lambda > 0.0 ? MarginalPenalty::scaled_kl(lambda) : MarginalPenalty::balanced());
  p.eps = c["eps"].get<double>();
  p.reference = reference_kind(c);
  p.validate();
  const UmgwOptions o = umgw_options(c);
  const fs::path out = prepare_out(c);

  const auto t0 = std::chrono::steady_clock::now();
  const UmgwResult r = solve_umgw(p, o);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  io::write_text(out / "objective_trace.csv", objective_trace_csv(r));

  std::vector<TransferOperator> ops;
  for (int i = 0; i + 1 < static_cast<int>(spaces.size()); ++i) {
    ops.push_back(transfer_operator(r.pi, i, i + 1));
    io::write_csv_matrix(out / ("operator_" + std::to_string(i) + "_" + std::to_string(i + 1) + ".csv"), ops.back().matrix);
  }

  Vector start = synth ? clean_density(snaps[0]) : Vector(spaces[0].weights() / spaces[0].mass());
  json report = trace_summary(r);
  report["seconds"] = seconds;
  report["eps"] = p.eps;
  report["kl"] = lambda;
  json loc = json::array(), masses = json::array();
  int h = 0, w = 0;
  std::vector<const MmSpace*> ptrs;
  for (const auto& s : spaces) ptrs.push_back(&s);
  const bool grid = grid_shape(ptrs, h, w);
  for (std::size_t k = 0; k < spaces.size(); ++k) {
    Vector d = start;
    if (k > 0) {
      const auto prop = propagate(compose({ops.begin(), ops.begin() + static_cast<long>(k)}), start);
      d = prop.density;
      masses.push_back(prop.massOut);
    }
    if (synth) loc.push_back(localization(snaps[k], d, c["radius"].get<double>()));
    if (!grid) continue;
    const Matrix img = io::render_grid(d, spaces[k].coords(), h, w);
    io::write_pgm(out / ("propagated_" + std::to_string(k) + ".pgm"), img);
    // clean particles blue, noise red, propagated mass green
    std::array<Matrix, 3> rgb{Matrix::Zero(h, w), img, Matrix::Zero(h, w)};
    if (synth) {
      const auto& sn = snaps[k];
      const double top = std::max(sn.cleanImage.maxCoeff(), sn.noiseImage.maxCoeff());
      if (sn.noiseImage.rows() == h && sn.noiseImage.cols() == w && top > 0) {
        rgb[0] = sn.noiseImage / top;
        rgb[2] = sn.cleanImage / top;
      }
    } else {
      rgb[2] = io::render_grid(spaces[k].weights(), spaces[k].coords(), h, w);
    }
    io::write_png_rgb(out / ("overlay_" + std::to_string(k) + ".png"), rgb);
  }
  report["propagated_mass"] = masses;
  if (synth) {
    const double acc = correspondence_accuracy(snaps, ops);
    report["correspondence_accuracy"] = acc;
    report["localization"] = loc;
    for (std::size_t k = 0; k < snaps.size(); ++k) {
      io::write_csv_matrix(out / csv_name("coherent", static_cast<int>(k)), snaps[k].coherent);
    }
    std::printf("transfer: accuracy %.3f, localization", acc);
    for (const auto& v : loc) std::printf(" %.4f", v.get<double>());
    std::printf("\n");
  }
  write_json(out / "report.json", report);
  std::printf("transfer: %d iterations, converged %s (%.2f s)\n", r.iterations, r.converged ? "yes" : "no", seconds);
  return 0;
}

// ---------------------------------------------------------------------------

std::vector<Param> check_params() {
  return join({{"suite", Kind::TextList, json::array({"kl", "mcnd", "scaling", "oracle", "tightness"}),
                "suites: kl, mcnd, scaling, oracle, tightness"},
               {"trials", Kind::Integer, nullptr, "trials per randomized suite (default per suite)"},
               {"tol", Kind::Real, nullptr, "pass threshold (default per suite)"},
               {"seed", Kind::Integer, 1, "seed of the randomized suites"},
               {"grid", Kind::Integer, 12, "tightness fixture grid size"},
               {"eps", Kind::Real, 0.15e-3, "tightness fixture eps"}},
              common_params("mgw_check"));
}

int cmd_check(const json& c) {
  const auto suites = c["suite"].get<std::vector<std::string>>();
  const auto trials = [&](int fallback) { return c["trials"].is_null() ? fallback : c["trials"].get<int>(); };
  const auto tol = [&](double fallback) { return c["tol"].is_null() ? fallback : c["tol"].get<double>(); };
  const auto seed = c["seed"].get<std::uint64_t>();
  if (!c["trials"].is_null() && c["trials"].get<int>() < 1) throw ConfigError("--trials must be positive");
  const fs::path out = prepare_out(c);
  json report = json::object();
  bool all = true;
  const auto show = [&](const std::string& name, const checks::Outcome& o) {
    std::printf("%-5s %-18s %s (%d trials)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), o.trials);
    report[name] = {{"pass", o.pass}, {"worst", o.worst}, {"trials", o.trials}, {"detail", o.detail}};
    all = all && o.pass;
  };
  for (const auto& s : suites) {
    if (s == "kl") {
      show("kl", checks::kl_factorization(trials(100), tol(1e-10), seed));
    } else if (s == "mcnd") {
      show("mcnd", checks::mcnd(trials(200), tol(1e-12), seed));
    } else if (s == "scaling") {
      show("scaling", checks::scaling(trials(50), tol(1e-10), seed));
    } else if (s == "oracle") {
      show("oracle-objective", checks::objective_oracle(trials(50), tol(1e-10), seed));
      show("oracle-sinkhorn", checks::sinkhorn_oracle(trials(20), tol(1e-8), seed));
    } else if (s == "tightness") {
      checks::TightnessFixture fx;
      fx.grid = c["grid"].get<int>();
      fx.eps = c["eps"].get<double>();
      show("tightness", checks::tightness(fx, tol(1e-3)).outcome);
    } else {
      throw ConfigError("unknown suite '" + s + "'");
    }
  }
  write_json(out / "check_report.json", report);
  return all ? 0 : kExitSolver;
}

// ---------------------------------------------------------------------------

std::vector<Param> synth_params() {
  auto p = particle_params();
  p[0].fallback = "10,2,3";
  return join(join({{"kind", Kind::Text, "particles", "particles, spade-heart or sphere"},
                    {"sphere-grid", Kind::RealList, json::array({40, 20}), "azimuth and polar cell counts"}},
                   p),
              common_params("mgw_synth"));
}

/// Sphere grid mm-space with integer (polar, azimuth) cell coordinates.
MmSpace sphere_with_cells(int nAz, int nPol, const Vector& weights) {
  MmSpace g = sphere_grid_mmspace(nAz, nPol, true);
  Matrix cells(g.size(), 2);
  for (int l = 0; l < nPol; ++l)
    for (int k = 0; k < nAz; ++k) {
      cells(l * nAz + k, 0) = l;
      cells(l * nAz + k, 1) = k;
    }
  return g.with_weights(weights).with_coords(cells);
}

int cmd_synth(const json& c) {
  const auto kind = c["kind"].get<std::string>();
  const fs::path out = prepare_out(c);
  if (kind == "particles") {
    const ParticleConfig pc = particle_config(c);
    const auto snaps = synth_particles(pc);
    for (std::size_t k = 0; k < snaps.size(); ++k) {
      const std::string stem = "snapshot_" + std::to_string(k);
      io::write_mmspace(out / stem, snaps[k].space);
      io::write_pgm(out / (stem + ".pgm"), snaps[k].image / snaps[k].image.maxCoeff());
      io::write_csv_matrix(out / csv_name("coherent", static_cast<int>(k)), snaps[k].coherent);
      if (snaps[k].noise.rows() > 0) io::write_csv_matrix(out / csv_name("noise", static_cast<int>(k)), snaps[k].noise);
    }
    write_json(out / "generator.json", {{"stream", kParticleStream}, {"seed", pc.seed}});
    std::printf("synth: %zu snapshots in %s\n", snaps.size(), out.string().c_str());
  } else if (kind == "spade-heart") {
    const int n = c["grid"].get<int>();
    io::write_pgm(out / "spade.pgm", spade_image(n));
    io::write_pgm(out / "heart.pgm", heart_image(n));
    const Matrix sp = spade_image(n), he = heart_image(n);
    io::write_mmspace(out / "spade", image_to_mmspace(sp, 0.0, DistanceNormalization::FullGrid));
    io::write_mmspace(out / "heart", image_to_mmspace(he, 0.0, DistanceNormalization::FullGrid));
    io::write_mmspace(out / "support", union_support({sp, he}));
    std::printf("synth: spade/heart %dx%d in %s\n", n, n, out.string().c_str());
  } else if (kind == "sphere") {
    const auto g = c["sphere-grid"].get<std::vector<double>>();
    if (g.size() != 2 || g[0] < 2 || g[1] < 2) throw ConfigError("--sphere-grid takes two counts >= 2");
    const int nAz = static_cast<int>(g[0]), nPol = static_cast<int>(g[1]);
    const Vector src = sphere_caps(nAz, nPol, sphere_source_caps());
    const Vector dst = sphere_caps(nAz, nPol, sphere_target_caps());
    const MmSpace grid = sphere_with_cells(nAz, nPol, Vector::Ones(nAz * nPol));
    io::write_mmspace(out / "source", restrict_to_support(grid.with_weights(src)));
    io::write_mmspace(out / "target", restrict_to_support(grid.with_weights(dst)));
    io::write_mmspace(out / "support", sphere_with_cells(nAz, nPol, sphere_grid_mmspace(nAz, nPol, true).weights()));
    io::write_pgm(out / "source.pgm", io::render_grid(src, grid.coords(), nPol, nAz));
    io::write_pgm(out / "target.pgm", io::render_grid(dst, grid.coords(), nPol, nAz));
    std::printf("synth: sphere %dx%d in %s\n", nAz, nPol, out.string().c_str());
  } else {
    throw ConfigError("--kind must be particles, spade-heart or sphere");
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct Command {
  std::string name;
  std::string help;
  cli::ParamSet params;
  int (*run)(const json&);
  CLI::App* app = nullptr;
};

int dispatch(Command& cmd, const json& file) {
  json resolved = cmd.params.resolve(file);
  const int threads = resolved["threads"].get<int>();
  if (threads < 0) throw ConfigError("--threads must be >= 0");
  if (threads > 0) set_worker_count(static_cast<unsigned>(threads));
  const fs::path out = prepare_out(resolved);
  json saved = resolved;
  saved["command"] = cmd.name;
  write_json(out / "resolved_config.json", saved);
  return cmd.run(resolved);
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Infeasible:
    case ErrorKind::InfeasibleIterate:
    case ErrorKind::DegenerateMass:
    case ErrorKind::NumericalFailure:
      return kExitSolver;
    default:
      return kExitInput;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unbalanced multi-marginal Gromov-Wasserstein transport"};
  app.require_subcommand(0, 1);
  std::string configPath;
  app.add_option("--config", configPath, "JSON config (a resolved_config.json reruns its command)");

  std::vector<Command> commands;
  commands.push_back({"umgw", "solve a UMGW problem on a tree", cli::ParamSet(umgw_params()), cmd_umgw});
  commands.push_back({"barycenter", "fixed-support (fused) GW barycenter", cli::ParamSet(barycenter_params()), cmd_barycenter});
  commands.push_back({"transfer", "transfer operators from snapshot chains", cli::ParamSet(transfer_params()), cmd_transfer});
  commands.push_back({"check", "run invariant suites", cli::ParamSet(check_params()), cmd_check});
  commands.push_back({"synth", "write synthetic fixtures", cli::ParamSet(synth_params()), cmd_synth});
  for (auto& c : commands) {
    c.app = app.add_subcommand(c.name, c.help);
    c.app->add_option("--config", configPath, "JSON config file; flags override it");
    c.params.attach(*c.app);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    json file;
    if (!configPath.empty()) file = cli::load_config(configPath);
    Command* chosen = nullptr;
    for (auto& c : commands) {
      if (c.app->parsed()) chosen = &c;
    }
    if (!chosen) {
      if (!file.is_object() || !file.contains("command")) {
        std::cerr << app.help();
        return kExitInput;
      }
      const auto name = file["command"].get<std::string>();
      for (auto& c : commands) {
        if (c.name == name) chosen = &c;
      }
      if (!chosen) throw ConfigError("unknown command '" + name + "' in config");
    } else if (file.is_object() && file.contains("command") && file["command"] != chosen->name) {
      throw ConfigError("config was written for '" + file["command"].get<std::string>() + "'");
    }
    return dispatch(*chosen, file);
  } catch (const ConfigError& e) {
    std::cerr << "mgw: config error: " << e.what() << "\n";
    return kExitInput;
  } catch (const Error& e) {
    std::cerr << "mgw: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const json::exception& e) {
    std::cerr << "mgw: config error: " << e.what() << "\n";
    return kExitInput;
  }
}
