#include "echolab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include "echolab/common.hpp"

namespace echolab {

namespace {

double cap_db(double v) { return std::clamp(v, -kMetricCapDb, kMetricCapDb); }

double energy(const std::vector<double>& x) {
  double acc = 0.0, comp = 0.0;
  for (double v : x) {
    const double term = v * v - comp;
    const double next = acc + term;
    comp = (next - acc) - term;
    acc = next;
  }
  return acc;
}

// Solves the symmetric positive (semi)definite system g a = c in place.
bool solve_spd(std::vector<double>& g, std::vector<double>& c, int n) {
  for (int k = 0; k < n; ++k) {
    int piv = k;
    double best = std::fabs(g[static_cast<std::size_t>(k) * n + k]);
    for (int r = k + 1; r < n; ++r) {
      const double m = std::fabs(g[static_cast<std::size_t>(r) * n + k]);
      if (m > best) {
        best = m;
        piv = r;
      }
    }
    if (best < 1e-300) return false;
    if (piv != k) {
      for (int j = 0; j < n; ++j)
        std::swap(g[static_cast<std::size_t>(k) * n + j], g[static_cast<std::size_t>(piv) * n + j]);
      std::swap(c[static_cast<std::size_t>(k)], c[static_cast<std::size_t>(piv)]);
    }
    const double inv = 1.0 / g[static_cast<std::size_t>(k) * n + k];
    for (int r = k + 1; r < n; ++r) {
      const double f = g[static_cast<std::size_t>(r) * n + k] * inv;
      if (f == 0.0) continue;
      for (int j = k; j < n; ++j)
        g[static_cast<std::size_t>(r) * n + j] -= f * g[static_cast<std::size_t>(k) * n + j];
      c[static_cast<std::size_t>(r)] -= f * c[static_cast<std::size_t>(k)];
    }
  }
  for (int k = n - 1; k >= 0; --k) {
    double acc = c[static_cast<std::size_t>(k)];
    for (int j = k + 1; j < n; ++j) acc -= g[static_cast<std::size_t>(k) * n + j] * c[static_cast<std::size_t>(j)];
    c[static_cast<std::size_t>(k)] = acc / g[static_cast<std::size_t>(k) * n + k];
  }
  return true;
}

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "n/a";
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << *v;
  return os.str();
}

}  // namespace

double erle_db(const std::vector<double>& mixture_ref, const std::vector<double>& estimate) {
  require(mixture_ref.size() == estimate.size(), "erle: length mismatch");
  const double ey = energy(mixture_ref);
  const double es = energy(estimate);
  if (es <= 0.0) return kMetricCapDb;
  if (ey <= 0.0) return -kMetricCapDb;
  return cap_db(10.0 * std::log10(ey / es));
}

double projection_sdr_db(const std::vector<double>& reference,
                         const std::vector<double>& estimate, int filter_len) {
  require(reference.size() == estimate.size(), "sdr: length mismatch");
  require(filter_len >= 1, "sdr: filter length must be positive");
  const std::size_t n = reference.size();
  require(n > static_cast<std::size_t>(filter_len), "sdr: signal shorter than filter");
  if (energy(reference) <= 0.0) throw DomainError("sdr: zero reference");

  const int l = filter_len;
  // Gram matrix of delayed references and their correlation with the estimate.
  std::vector<double> gram(static_cast<std::size_t>(l) * l, 0.0);
  std::vector<double> corr(static_cast<std::size_t>(l), 0.0);
  for (int i = 0; i < l; ++i) {
    for (int j = i; j < l; ++j) {
      double acc = 0.0;
      for (std::size_t t = static_cast<std::size_t>(j); t < n; ++t)
        acc += reference[t - static_cast<std::size_t>(i)] * reference[t - static_cast<std::size_t>(j)];
      gram[static_cast<std::size_t>(i) * l + j] = acc;
      gram[static_cast<std::size_t>(j) * l + i] = acc;
    }
    double acc = 0.0;
    for (std::size_t t = static_cast<std::size_t>(i); t < n; ++t)
      acc += estimate[t] * reference[t - static_cast<std::size_t>(i)];
    corr[static_cast<std::size_t>(i)] = acc;
  }
  double trace = 0.0;
  for (int i = 0; i < l; ++i) trace += gram[static_cast<std::size_t>(i) * l + i];
  const double load = 1e-12 * trace / l;
  for (int i = 0; i < l; ++i) gram[static_cast<std::size_t>(i) * l + i] += load;
  if (!solve_spd(gram, corr, l)) throw NumericError("sdr: singular projection system");

  double e_target = 0.0, e_dist = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    double st = 0.0;
    for (int i = 0; i <= std::min<int>(l - 1, static_cast<int>(t)); ++i)
      st += corr[static_cast<std::size_t>(i)] * reference[t - static_cast<std::size_t>(i)];
    const double d = estimate[t] - st;
    e_target += st * st;
    e_dist += d * d;
  }
  if (e_dist <= 0.0) return kMetricCapDb;
  if (e_target <= 0.0) return -kMetricCapDb;
  return cap_db(10.0 * std::log10(e_target / e_dist));
}

Prf doa_prf(const std::vector<std::uint8_t>& predicted, const std::vector<std::uint8_t>& labels) {
  if (predicted.size() != labels.size()) throw DomainError("doa_prf: length mismatch");
  Prf out;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] != 0, y = labels[i] != 0;
    if (p && y) ++out.tp;
    else if (p && !y) ++out.fp;
    else if (!p && y) ++out.fn;
  }
  out.precision = (out.tp + out.fp) > 0 ? static_cast<double>(out.tp) / (out.tp + out.fp)
                                        : (out.fn == 0 ? 1.0 : 0.0);
  out.recall = (out.tp + out.fn) > 0 ? static_cast<double>(out.tp) / (out.tp + out.fn)
                                     : (out.fp == 0 ? 1.0 : 0.0);
  out.f1 = (out.precision + out.recall) > 0.0
               ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
               : 0.0;
  return out;
}

namespace {

struct KahanMean {
  double sum = 0.0, comp = 0.0;
  int n = 0;
  void add(double v) {
    const double term = v - comp;
    const double next = sum + term;
    comp = (next - sum) - term;
    sum = next;
    ++n;
  }
  std::optional<double> mean() const {
    if (n == 0) return std::nullopt;
    return sum / n;
  }
};

struct GroupAcc {
  AggregateRow row;
  KahanMean erle, sdr, p, r, f1;
};

}  // namespace

std::vector<AggregateRow> aggregate_reports(const std::vector<MetricReport>& reports) {
  std::vector<std::string> order;
  std::map<std::string, GroupAcc> groups;
  for (const MetricReport& rep : reports) {
    const std::string key = rep.test_set + "\x1f" + to_string(rep.pattern) + "\x1f" + rep.mode;
    auto it = groups.find(key);
    if (it == groups.end()) {
      GroupAcc acc;
      acc.row.test_set = rep.test_set;
      acc.row.pattern = rep.pattern;
      acc.row.mode = rep.mode;
      it = groups.emplace(key, acc).first;
      order.push_back(key);
    }
    GroupAcc& g = it->second;
    ++g.row.count;
    if (rep.erle_db) g.erle.add(*rep.erle_db);
    if (rep.sdr_db) g.sdr.add(*rep.sdr_db);
    if (rep.doa_p) g.p.add(*rep.doa_p);
    if (rep.doa_r) g.r.add(*rep.doa_r);
    if (rep.doa_f1) g.f1.add(*rep.doa_f1);
  }
  std::vector<AggregateRow> out;
  out.reserve(order.size());
  for (const std::string& key : order) {
    GroupAcc& g = groups.at(key);
    g.row.mean_erle_db = g.erle.mean();
    g.row.mean_sdr_db = g.sdr.mean();
    g.row.mean_doa_p = g.p.mean();
    g.row.mean_doa_r = g.r.mean();
    g.row.mean_doa_f1 = g.f1.mean();
    out.push_back(g.row);
  }
  return out;
}

std::string reports_csv(const std::vector<MetricReport>& reports) {
  std::ostringstream os;
  os << "scenario_id,test_set,pattern,mode,erle_db,sdr_db,doa_p,doa_r,doa_f1\n";
  for (const MetricReport& r : reports) {
    os << r.scenario_id << ',' << r.test_set << ',' << to_string(r.pattern) << ',' << r.mode
       << ',' << fmt_opt(r.erle_db) << ',' << fmt_opt(r.sdr_db) << ',' << fmt_opt(r.doa_p)
       << ',' << fmt_opt(r.doa_r) << ',' << fmt_opt(r.doa_f1) << '\n';
  }
  return os.str();
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::ostringstream os;
  os << "test_set,pattern,mode,count,erle_db,sdr_db,doa_p,doa_r,doa_f1\n";
  for (const AggregateRow& r : rows) {
    os << r.test_set << ',' << to_string(r.pattern) << ',' << r.mode << ',' << r.count << ','
       << fmt_opt(r.mean_erle_db) << ',' << fmt_opt(r.mean_sdr_db) << ','
       << fmt_opt(r.mean_doa_p) << ',' << fmt_opt(r.mean_doa_r) << ','
       << fmt_opt(r.mean_doa_f1) << '\n';
  }
  return os.str();
}

std::string aggregate_table(const std::vector<AggregateRow>& rows) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"test_set", "pattern", "mode", "n", "pesq", "erle_db", "sdr_db", "doa_p",
                   "doa_r", "doa_f1"});
  for (const AggregateRow& r : rows) {
    cells.push_back({r.test_set, to_string(r.pattern), r.mode, std::to_string(r.count), "n/a",
                     fmt_opt(r.mean_erle_db), fmt_opt(r.mean_sdr_db), fmt_opt(r.mean_doa_p),
                     fmt_opt(r.mean_doa_r), fmt_opt(r.mean_doa_f1)});
  }
  std::vector<std::size_t> width(cells[0].size(), 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::ostringstream os;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      os << std::left << std::setw(static_cast<int>(width[c]) + 2) << row[c];
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace echolab
