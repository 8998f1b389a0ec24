#include "uqsub/uqsub.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "uqsub/error.hpp"
#include "uqsub/experiment.hpp"
#include "uqsub/io.hpp"
#include "uqsub/rsg.hpp"
#include "uqsub/submodular.hpp"

struct uqsub_config {
  uqsub::ExperimentConfig value;
};

struct uqsub_expansion {
  uqsub::Expansion value;
};

struct uqsub_trace {
  uqsub::RunTrace value;
};

struct uqsub_graph {
  uqsub::CutGraph value;
  uqsub::SetFunctionSpec function;
};

namespace {

thread_local std::string g_message;
thread_local std::string g_field;

uqsub_status fail(uqsub_status status, const std::string& message,
                  const std::string& field = {}) {
  g_message = message;
  g_field = field;
  return status;
}

// Runs `body`, translating library exceptions into status codes.
template <typename F>
uqsub_status guarded(F&& body) {
  try {
    body();
    return UQSUB_OK;
  } catch (const uqsub::ConfigError& e) {
    return fail(UQSUB_ERR_CONFIG, e.what(), e.field());
  } catch (const uqsub::IoError& e) {
    return fail(UQSUB_ERR_IO, e.what());
  } catch (const uqsub::DomainError& e) {
    return fail(UQSUB_ERR_DOMAIN, e.what());
  } catch (const uqsub::CapacityError& e) {
    return fail(UQSUB_ERR_CAPACITY, e.what());
  } catch (const uqsub::StructureError& e) {
    return fail(UQSUB_ERR_STRUCTURE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(UQSUB_ERR_CAPACITY, "out of memory");
  } catch (const std::exception& e) {
    return fail(UQSUB_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(UQSUB_ERR_RUNTIME, "unknown failure");
  }
}

uqsub_status null_argument(const char* name) {
  return fail(UQSUB_ERR_INVALID_ARGUMENT,
              std::string("null argument: ") + name);
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* uqsub_version(void) { return "1.0.0"; }

const char* uqsub_status_name(uqsub_status status) {
  switch (status) {
    case UQSUB_OK: return "ok";
    case UQSUB_ERR_INVALID_ARGUMENT: return "invalid argument";
    case UQSUB_ERR_CONFIG: return "config error";
    case UQSUB_ERR_IO: return "io error";
    case UQSUB_ERR_DOMAIN: return "domain error";
    case UQSUB_ERR_CAPACITY: return "capacity error";
    case UQSUB_ERR_STRUCTURE: return "structure error";
    case UQSUB_ERR_RUNTIME: return "runtime error";
  }
  return "unknown status";
}

const char* uqsub_last_error(void) { return g_message.c_str(); }
const char* uqsub_last_error_field(void) { return g_field.c_str(); }

void uqsub_string_free(char* s) { std::free(s); }

// ---- configuration ---------------------------------------------------------

uqsub_status uqsub_config_load(const char* path, uqsub_config** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    *out = new uqsub_config{uqsub::ExperimentConfig::load(path)};
  });
}

uqsub_status uqsub_config_set_seed(uqsub_config* cfg, uint64_t seed) {
  if (!cfg) return null_argument("cfg");
  cfg->value.rsg.seed = seed;
  return UQSUB_OK;
}

uqsub_status uqsub_config_set_output_dir(uqsub_config* cfg, const char* dir) {
  if (!cfg) return null_argument("cfg");
  if (!dir) return null_argument("dir");
  if (!*dir) return fail(UQSUB_ERR_CONFIG, "output.dir: empty path", "output.dir");
  return guarded([&] { cfg->value.output_dir = dir; });
}

uqsub_status uqsub_config_output_dir(const uqsub_config* cfg, char** out) {
  if (!cfg) return null_argument("cfg");
  if (!out) return null_argument("out");
  return guarded([&] { *out = copy_string(cfg->value.output_dir.string()); });
}

void uqsub_config_free(uqsub_config* cfg) { delete cfg; }

uqsub_status uqsub_run_experiment(const uqsub_config* cfg,
                                  uqsub_run_summary* summary) {
  if (!cfg) return null_argument("cfg");
  return guarded([&] {
    const uqsub::ExperimentResult r = uqsub::run_experiment(cfg->value);
    if (summary) {
      summary->initial_error_pi = r.trace.initial_error_pi;
      summary->final_error_pi = r.trace.rows.empty()
                                    ? r.trace.initial_error_pi
                                    : r.trace.rows.back().fn_error_pi;
      summary->sg_calls = r.trace.rows.size();
      summary->rsg_calls = r.trace.rsg_calls;
      summary->final_terms = r.expansion.terms();
    }
  });
}

uqsub_status uqsub_run_statistics(const uqsub_config* cfg,
                                  const char* expansion_path) {
  if (!cfg) return null_argument("cfg");
  if (!expansion_path) return null_argument("expansion_path");
  return guarded(
      [&] { uqsub::run_statistics(expansion_path, cfg->value); });
}

// ---- expansions ------------------------------------------------------------

uqsub_status uqsub_expansion_load(const char* path, uqsub_expansion** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded(
      [&] { *out = new uqsub_expansion{uqsub::load_expansion(path)}; });
}

uqsub_status uqsub_expansion_save(const uqsub_expansion* e, const char* path) {
  if (!e) return null_argument("e");
  if (!path) return null_argument("path");
  return guarded([&] { uqsub::save_expansion(e->value, path); });
}

uqsub_status uqsub_expansion_shape(const uqsub_expansion* e, size_t* terms,
                                   size_t* outputs) {
  if (!e) return null_argument("e");
  if (terms) *terms = e->value.terms();
  if (outputs) *outputs = e->value.outputs();
  return UQSUB_OK;
}

uqsub_status uqsub_expansion_evaluate(const uqsub_expansion* e, double theta,
                                      double* out, size_t len) {
  if (!e) return null_argument("e");
  if (!out) return null_argument("out");
  if (len < e->value.outputs())
    return fail(UQSUB_ERR_INVALID_ARGUMENT, "output buffer too short");
  return guarded([&] {
    const Eigen::VectorXd x = uqsub::synthesize(e->value, theta);
    for (Eigen::Index k = 0; k < x.size(); ++k) out[k] = x[k];
  });
}

void uqsub_expansion_free(uqsub_expansion* e) { delete e; }

// ---- traces ----------------------------------------------------------------

uqsub_status uqsub_trace_load(const char* path, uqsub_trace** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw uqsub::IoError(std::string("cannot open ") + path);
    *out = new uqsub_trace{uqsub::read_trace_csv(in)};
  });
}

uqsub_status uqsub_trace_size(const uqsub_trace* t, size_t* rows) {
  if (!t) return null_argument("t");
  if (!rows) return null_argument("rows");
  *rows = t->value.rows.size();
  return UQSUB_OK;
}

uqsub_status uqsub_trace_row_at(const uqsub_trace* t, size_t i,
                                uqsub_trace_row* out) {
  if (!t) return null_argument("t");
  if (!out) return null_argument("out");
  if (i >= t->value.rows.size())
    return fail(UQSUB_ERR_INVALID_ARGUMENT, "row index out of range");
  const uqsub::TraceRow& r = t->value.rows[i];
  *out = {r.call_index, r.outer_i,        r.stage_k,    r.m,
          r.eta,        r.fn_error_pi,    r.fn_error_pi_sq,
          r.elapsed_ms, r.coefficient_hash};
  return UQSUB_OK;
}

uqsub_status uqsub_trace_error_curve(const uqsub_trace* t, char** csv) {
  if (!t) return null_argument("t");
  if (!csv) return null_argument("csv");
  return guarded([&] {
    std::ostringstream ss;
    uqsub::write_error_curve_csv(uqsub::error_curve(t->value), ss);
    *csv = copy_string(ss.str());
  });
}

uqsub_status uqsub_trace_cusps(const uqsub_trace* t, size_t* cusps,
                               size_t* loops, double* log_slope) {
  if (!t) return null_argument("t");
  return guarded([&] {
    const uqsub::CuspReport r = uqsub::detect_cusps(t->value);
    if (cusps) *cusps = r.cusps;
    if (loops) *loops = r.loops.size();
    if (log_slope) *log_slope = r.log_slope;
  });
}

void uqsub_trace_free(uqsub_trace* t) { delete t; }

// ---- graphs ----------------------------------------------------------------

uqsub_status uqsub_graph_load(const char* path, double lo, double hi,
                              uqsub_graph** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    uqsub::CutGraph g = uqsub::CutGraph::load(path, lo, hi);
    auto f = uqsub::SetFunctionSpec::from_graph(g);
    *out = new uqsub_graph{std::move(g), std::move(f)};
  });
}

uqsub_status uqsub_graph_figure1(double lo, double hi, uqsub_graph** out) {
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    uqsub::CutGraph g = uqsub::CutGraph::figure1(lo, hi);
    auto f = uqsub::SetFunctionSpec::from_graph(g);
    *out = new uqsub_graph{std::move(g), std::move(f)};
  });
}

uqsub_status uqsub_graph_ground_size(const uqsub_graph* g, size_t* n) {
  if (!g) return null_argument("g");
  if (!n) return null_argument("n");
  *n = g->value.ground_size();
  return UQSUB_OK;
}

uqsub_status uqsub_graph_cut_value(const uqsub_graph* g, const size_t* members,
                                   size_t count, double theta, double* value) {
  if (!g) return null_argument("g");
  if (count && !members) return null_argument("members");
  if (!value) return null_argument("value");
  return guarded([&] {
    uqsub::Subset s(members, members + count);
    std::sort(s.begin(), s.end());
    *value = uqsub::cut_value(g->value, s, theta);
  });
}

uqsub_status uqsub_graph_brute_force_min(const uqsub_graph* g, double theta,
                                         double* value, size_t* members,
                                         size_t capacity, size_t* count) {
  if (!g) return null_argument("g");
  if (!value) return null_argument("value");
  if (!count) return null_argument("count");
  if (capacity && !members) return null_argument("members");
  return guarded([&] {
    const uqsub::DiscreteSolution best =
        uqsub::brute_force_min(g->function, theta);
    if (best.members.size() > capacity)
      throw uqsub::CapacityError("members buffer too small");
    std::copy(best.members.begin(), best.members.end(), members);
    *count = best.members.size();
    *value = best.value;
  });
}

uqsub_status uqsub_graph_lovasz(const uqsub_graph* g, const double* x,
                                size_t n, double theta, double* value,
                                double* subgradient) {
  if (!g) return null_argument("g");
  if (!x) return null_argument("x");
  if (!value) return null_argument("value");
  if (n != g->value.ground_size())
    return fail(UQSUB_ERR_STRUCTURE, "x length differs from the ground size");
  return guarded([&] {
    const Eigen::Map<const Eigen::VectorXd> xv(x, static_cast<Eigen::Index>(n));
    Eigen::VectorXd grad;
    *value = uqsub::lovasz_eval_and_subgradient(g->function, xv, theta,
                                                subgradient ? &grad : nullptr);
    if (subgradient)
      for (size_t i = 0; i < n; ++i)
        subgradient[i] = grad[static_cast<Eigen::Index>(i)];
  });
}

void uqsub_graph_free(uqsub_graph* g) { delete g; }

}  // extern "C"
