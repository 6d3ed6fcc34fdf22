#include "pathctl/pathctl.h"

#include "pathctl/error.hpp"
#include "pathctl/experiments.hpp"
#include "pathctl/gauge.hpp"
#include "pathctl/path.hpp"

#include <exception>
#include <memory>
#include <new>
#include <string>
#include <vector>

struct pc_report {
  pathctl::Report report;
  std::string csv;
  std::string summary;
};

struct pc_path {
  pathctl::Path path;
};

namespace {

thread_local std::string last_error;

pc_status to_status(pathctl::ErrorKind kind) {
  using pathctl::ErrorKind;
  switch (kind) {
    case ErrorKind::InvalidArgument:
      return PC_ERR_INVALID_ARGUMENT;
    case ErrorKind::DimensionMismatch:
      return PC_ERR_DIMENSION;
    case ErrorKind::OutOfRange:
      return PC_ERR_OUT_OF_RANGE;
    case ErrorKind::NonFinite:
      return PC_ERR_NON_FINITE;
    case ErrorKind::CapExceeded:
      return PC_ERR_CAP_EXCEEDED;
    case ErrorKind::Contract:
      return PC_ERR_CONTRACT;
    case ErrorKind::Divergence:
      return PC_ERR_DIVERGENCE;
    case ErrorKind::Config:
      return PC_ERR_CONFIG;
  }
  return PC_ERR_INTERNAL;
}

template <class F>
pc_status guarded(F&& fn) {
  try {
    fn();
    last_error.clear();
    return PC_OK;
  } catch (const pathctl::Error& e) {
    last_error = e.what();
    return to_status(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown error";
  }
  return PC_ERR_INTERNAL;
}

pc_status null_argument(const char* what) {
  last_error = std::string(what) + " is null";
  return PC_ERR_INVALID_ARGUMENT;
}

const pathctl::ExperimentInfo* info(const char* name) {
  if (name == nullptr) return nullptr;
  for (const auto& e : pathctl::experiments())
    if (e.name == name) return &e;
  return nullptr;
}

}  // namespace

extern "C" {

const char* pc_last_error(void) { return last_error.c_str(); }

const char* pc_version(void) { return "0.1.0"; }

size_t pc_experiment_count(void) { return pathctl::experiments().size(); }

const char* pc_experiment_name(size_t index) {
  const auto& all = pathctl::experiments();
  return index < all.size() ? all[index].name.c_str() : nullptr;
}

const char* pc_experiment_description(const char* name) {
  const auto* e = info(name);
  return e ? e->description.c_str() : nullptr;
}

const char* pc_experiment_preset(const char* name) {
  const auto* e = info(name);
  return e ? e->preset.c_str() : nullptr;
}

pc_status pc_experiment_run(const char* name, const char* config_json, const char* const* overrides,
                            size_t n_overrides, pc_report** out) {
  if (name == nullptr) return null_argument("name");
  if (config_json == nullptr) return null_argument("config_json");
  if (out == nullptr) return null_argument("out");
  if (n_overrides > 0 && overrides == nullptr) return null_argument("overrides");
  *out = nullptr;
  return guarded([&] {
    std::vector<std::string> ov;
    for (size_t i = 0; i < n_overrides; ++i) {
      if (overrides[i] == nullptr) pathctl::fail(pathctl::ErrorKind::InvalidArgument, "override is null");
      ov.emplace_back(overrides[i]);
    }
    auto r = std::make_unique<pc_report>();
    r->report = pathctl::run_experiment(name, config_json, ov);
    r->csv = r->report.csv();
    r->summary = r->report.summary_text();
    *out = r.release();
  });
}

const char* pc_report_csv(const pc_report* r) { return r ? r->csv.c_str() : ""; }

const char* pc_report_summary(const pc_report* r) { return r ? r->summary.c_str() : ""; }

int pc_report_passed(const pc_report* r) { return r && r->report.passed ? 1 : 0; }

size_t pc_report_rows(const pc_report* r) { return r ? r->report.rows.size() : 0; }

void pc_report_free(pc_report* r) { delete r; }

pc_status pc_path_create(size_t dim, size_t t_index, double dt, const double* values, pc_path** out) {
  if (values == nullptr) return null_argument("values");
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    pathctl::require(dim >= 1, pathctl::ErrorKind::InvalidArgument, "path: dim must be >= 1");
    const auto rows = static_cast<Eigen::Index>(dim);
    const auto cols = static_cast<Eigen::Index>(t_index + 1);
    pathctl::Matrix v = Eigen::Map<const pathctl::Matrix>(values, rows, cols);
    *out = new pc_path{pathctl::Path(std::move(v), dt)};
  });
}

void pc_path_free(pc_path* p) { delete p; }

pc_status pc_path_sup_norm(const pc_path* p, double* out) {
  if (p == nullptr) return null_argument("path");
  if (out == nullptr) return null_argument("out");
  return guarded([&] { *out = pathctl::sup_norm(p->path); });
}

pc_status pc_path_d_infty(const pc_path* p, const pc_path* q, double* out) {
  if (p == nullptr || q == nullptr) return null_argument("path");
  if (out == nullptr) return null_argument("out");
  return guarded([&] { *out = pathctl::d_infty(p->path, q->path); });
}

pc_status pc_upsilon(const pc_path* p, const pc_path* q, int m, double M, double* out) {
  if (p == nullptr || q == nullptr) return null_argument("path");
  if (out == nullptr) return null_argument("out");
  return guarded([&] { *out = pathctl::upsilon(p->path, q->path, {m, M}); });
}

pc_status pc_upsilon_bar(const pc_path* p, const pc_path* q, int m, double M, double* out) {
  if (p == nullptr || q == nullptr) return null_argument("path");
  if (out == nullptr) return null_argument("out");
  return guarded([&] { *out = pathctl::upsilon_bar(p->path, q->path, {m, M}); });
}

}  // extern "C"
