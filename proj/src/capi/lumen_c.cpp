#include "lumen/lumen.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <new>
#include <string>

#include "core/assess.hpp"
#include "core/error.hpp"
#include "core/pipeline.hpp"
#include "core/scenario.hpp"
#include "core/service.hpp"
#include "core/workspace.hpp"

struct lumen_workspace {
  std::filesystem::path root;
};

struct lumen_service {
  std::unique_ptr<lumen::service::Service> impl;
};

namespace {

thread_local std::string g_last_error;

lumen_status fail(lumen_status s, const char* what) {
  g_last_error = what;
  return s;
}

// Maps the core exception hierarchy onto status codes.
template <class F>
lumen_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return LUMEN_OK;
  } catch (const lumen::ParseError& e) {
    return fail(LUMEN_E_PARSE, e.what());
  } catch (const lumen::OutOfBoundsError& e) {
    return fail(LUMEN_E_OUT_OF_BOUNDS, e.what());
  } catch (const lumen::DomainError& e) {
    return fail(LUMEN_E_DOMAIN, e.what());
  } catch (const lumen::NotFoundError& e) {
    return fail(LUMEN_E_NOT_FOUND, e.what());
  } catch (const lumen::IoError& e) {
    return fail(LUMEN_E_IO, e.what());
  } catch (const lumen::StaleError& e) {
    return fail(LUMEN_E_STALE, e.what());
  } catch (const lumen::LockedError& e) {
    return fail(LUMEN_E_LOCKED, e.what());
  } catch (const lumen::NumericError& e) {
    return fail(LUMEN_E_NUMERIC, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(LUMEN_E_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(LUMEN_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(LUMEN_E_INTERNAL, e.what());
  } catch (...) {
    return fail(LUMEN_E_INTERNAL, "unknown error");
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.data(), s.size() + 1);
  return p;
}

void put(char** out, const std::string& s) {
  if (out) *out = dup(s);
}

lumen_status null_arg(const char* name) {
  g_last_error = std::string(name) + " must not be NULL";
  return LUMEN_E_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

LUMEN_API const char* lumen_version(void) { return "0.3.0"; }

LUMEN_API const char* lumen_status_name(lumen_status status) {
  switch (status) {
    case LUMEN_OK: return "ok";
    case LUMEN_E_INVALID_ARGUMENT: return "invalid argument";
    case LUMEN_E_PARSE: return "parse error";
    case LUMEN_E_DOMAIN: return "domain error";
    case LUMEN_E_OUT_OF_BOUNDS: return "out of bounds";
    case LUMEN_E_NOT_FOUND: return "not found";
    case LUMEN_E_IO: return "i/o error";
    case LUMEN_E_STALE: return "stale artifact";
    case LUMEN_E_LOCKED: return "workspace locked";
    case LUMEN_E_NUMERIC: return "numeric error";
    case LUMEN_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

LUMEN_API const char* lumen_last_error(void) { return g_last_error.c_str(); }

LUMEN_API void lumen_string_free(char* s) { std::free(s); }

LUMEN_API lumen_status lumen_workspace_open(const char* dir, int create, lumen_workspace** out) {
  if (!dir) return null_arg("dir");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guard([&] {
    lumen::workspace::Workspace probe(dir, create != 0);
    *out = new lumen_workspace{probe.root()};
  });
}

LUMEN_API void lumen_workspace_close(lumen_workspace* ws) { delete ws; }

LUMEN_API lumen_status lumen_workspace_manifest(const lumen_workspace* ws, char** json_out) {
  if (!ws) return null_arg("ws");
  if (!json_out) return null_arg("json_out");
  return guard([&] { put(json_out, lumen::workspace::Workspace(ws->root).manifest().dump(2) + "\n"); });
}

LUMEN_API lumen_status lumen_ingest(lumen_workspace* ws, const char* poi_csv, const char* ntl_grid,
                                    char** summary) {
  if (!ws) return null_arg("ws");
  if (!poi_csv) return null_arg("poi_csv");
  return guard([&] {
    lumen::pipeline::IngestOptions o;
    o.poi_csv = poi_csv;
    if (ntl_grid) o.ntl_grid = ntl_grid;
    put(summary, lumen::pipeline::cmd_ingest(ws->root, o));
  });
}

LUMEN_API lumen_status lumen_assess(lumen_workspace* ws, double bandwidth_m, double side_m, unsigned threads,
                                    char** summary) {
  if (!ws) return null_arg("ws");
  return guard([&] {
    put(summary, lumen::pipeline::cmd_assess(ws->root, {bandwidth_m, side_m, threads}));
  });
}

LUMEN_API lumen_status lumen_cluster(lumen_workspace* ws, int k, uint64_t seed, char** summary) {
  if (!ws) return null_arg("ws");
  return guard([&] { put(summary, lumen::pipeline::cmd_cluster(ws->root, {k, seed})); });
}

LUMEN_API void lumen_dml_options_init(lumen_dml_options* opts) {
  if (!opts) return;
  opts->category = nullptr;
  opts->folds = 3;
  opts->seed = 0;
  opts->l1_ratio = 0.5;
  opts->split = nullptr;
  opts->drop_missing = 0;
}

LUMEN_API lumen_status lumen_dml(lumen_workspace* ws, const lumen_dml_options* opts, char** summary) {
  if (!ws) return null_arg("ws");
  if (!opts) return null_arg("opts");
  return guard([&] {
    lumen::pipeline::DmlOptions o;
    if (opts->category) o.category = lumen::category_from_string(opts->category);
    o.folds = opts->folds;
    o.seed = opts->seed;
    o.l1_ratio = opts->l1_ratio;
    if (opts->split) o.split = std::array<double, 3>{opts->split[0], opts->split[1], opts->split[2]};
    o.missing = opts->drop_missing ? lumen::causal::MissingPolicy::kDropRows : lumen::causal::MissingPolicy::kSentinel;
    put(summary, lumen::pipeline::cmd_dml(ws->root, o));
  });
}

LUMEN_API lumen_status lumen_whatif(lumen_workspace* ws, const char* spec_path, const char* area, int all_maps,
                                    char** report_json) {
  if (!ws) return null_arg("ws");
  if (!spec_path) return null_arg("spec_path");
  return guard([&] {
    lumen::pipeline::WhatifOptions o;
    o.spec = spec_path;
    if (area) o.area = area;
    o.all_maps = all_maps != 0;
    put(report_json, lumen::pipeline::cmd_whatif(ws->root, o));
  });
}

LUMEN_API lumen_status lumen_render(lumen_workspace* ws, const char* area, int size, const char* out_path,
                                    char** written_path) {
  if (!ws) return null_arg("ws");
  if (!area) return null_arg("area");
  return guard([&] {
    lumen::pipeline::RenderOptions o;
    o.area = area;
    o.size = size;
    if (out_path) o.out = out_path;
    put(written_path, lumen::pipeline::cmd_render(ws->root, o));
  });
}

LUMEN_API lumen_status lumen_plots(lumen_workspace* ws, const char* area, char** written_path) {
  if (!ws) return null_arg("ws");
  if (!area) return null_arg("area");
  return guard([&] { put(written_path, lumen::pipeline::cmd_plots(ws->root, area)); });
}

LUMEN_API lumen_status lumen_influence(double ntl, double distance_m, double bandwidth_m, double* out) {
  if (!out) return null_arg("out");
  return guard([&] { *out = lumen::assess::influence(ntl, distance_m, bandwidth_m); });
}

LUMEN_API lumen_status lumen_level_kl(const double* p, const double* q, size_t n, double* out) {
  if (!p) return null_arg("p");
  if (!q) return null_arg("q");
  if (!out) return null_arg("out");
  return guard([&] { *out = lumen::scenario::level_kl({p, n}, {q, n}); });
}

LUMEN_API lumen_status lumen_metrics(const char* ppm_a, const char* ppm_b, char** json_out) {
  if (!ppm_a) return null_arg("ppm_a");
  if (!ppm_b) return null_arg("ppm_b");
  return guard([&] { put(json_out, lumen::pipeline::cmd_metrics(ppm_a, ppm_b)); });
}

LUMEN_API lumen_status lumen_synth(const char* spec_json, const char* out_csv, char** summary) {
  if (!spec_json) return null_arg("spec_json");
  if (!out_csv) return null_arg("out_csv");
  return guard([&] { put(summary, lumen::pipeline::cmd_synth(spec_json, out_csv)); });
}

LUMEN_API lumen_status lumen_losses_selftest(uint64_t seed, int points, char** report, int* all_passed) {
  return guard([&] {
    bool passed = false;
    const std::string text = lumen::pipeline::cmd_losses_selftest(seed, points, passed);
    if (all_passed) *all_passed = passed ? 1 : 0;
    put(report, text);
  });
}

LUMEN_API void lumen_service_options_init(lumen_service_options* opts) {
  if (!opts) return;
  const lumen::service::ServiceOptions d;
  opts->cors_origin = nullptr;
  opts->max_scenario_areas = d.max_scenario_areas;
  opts->session_ttl_seconds = static_cast<int>(d.session_ttl.count());
}

LUMEN_API lumen_status lumen_service_create(const char* workspace_dir, const lumen_service_options* opts,
                                            lumen_service** out) {
  if (!workspace_dir) return null_arg("workspace_dir");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guard([&] {
    lumen::service::ServiceOptions o;
    if (opts) {
      if (opts->cors_origin) o.cors_origin = opts->cors_origin;
      o.max_scenario_areas = opts->max_scenario_areas;
      if (opts->session_ttl_seconds <= 0) throw lumen::DomainError("session ttl must be positive");
      o.session_ttl = std::chrono::seconds(opts->session_ttl_seconds);
    }
    auto svc = std::make_unique<lumen_service>();
    svc->impl = std::make_unique<lumen::service::Service>(workspace_dir, o);
    *out = svc.release();
  });
}

LUMEN_API lumen_status lumen_service_start(lumen_service* svc, const char* host, int port, int* bound_port) {
  if (!svc) return null_arg("svc");
  if (!host) return null_arg("host");
  return guard([&] {
    const int p = svc->impl->start(host, port);
    if (bound_port) *bound_port = p;
  });
}

LUMEN_API lumen_status lumen_service_listen(lumen_service* svc, const char* host, int port) {
  if (!svc) return null_arg("svc");
  if (!host) return null_arg("host");
  return guard([&] { svc->impl->listen(host, port); });
}

LUMEN_API lumen_status lumen_service_stop(lumen_service* svc) {
  if (!svc) return null_arg("svc");
  return guard([&] { svc->impl->stop(); });
}

LUMEN_API int lumen_service_port(const lumen_service* svc) { return svc ? svc->impl->port() : -1; }

LUMEN_API void lumen_service_destroy(lumen_service* svc) { delete svc; }

}  // extern "C"
