#include <fstream>
#include <locale>
#include <ostream>
#include <sstream>
#include <string>

#include "mvhedge/hedgedp.hpp"

namespace mvhedge {

// Self-describing text container. Every number is written with 17 significant
// digits, so doubles survive the round trip bit-exactly and re-saving a loaded
// table reproduces the file byte for byte.
namespace {

constexpr const char* kMagic = "mvhedge-policy";
constexpr int kVersion = 1;

void put(std::ostream& os, const std::vector<double>& v, const char* tag) {
  os << tag << ' ' << v.size();
  for (std::size_t i = 0; i < v.size(); ++i) os << (i % 8 == 0 ? '\n' : ' ') << v[i];
  os << '\n';
}

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) { is_.imbue(std::locale::classic()); }

  std::string word() {
    std::string w;
    if (!(is_ >> w)) fail("policy file: unexpected end of input");
    return w;
  }
  void expect(const char* tag) {
    const std::string w = word();
    if (w != tag) fail(std::string("policy file: expected '") + tag + "', got '" + w + "'");
  }
  double num() {
    double v;
    if (!(is_ >> v)) fail("policy file: malformed number");
    return v;
  }
  long integer() {
    long v;
    if (!(is_ >> v)) fail("policy file: malformed integer");
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    if (!(is_ >> v)) fail("policy file: malformed integer");
    return v;
  }
  std::vector<double> nums(const char* tag) {
    expect(tag);
    const long n = integer();
    require(n >= 0, "policy file: negative array length");
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& x : v) x = num();
    return v;
  }

 private:
  std::istream& is_;
};

}  // namespace

void PolicyTable::save(std::ostream& os) const {
  os.imbue(std::locale::classic());
  os.precision(17);
  os << kMagic << ' ' << kVersion << '\n';
  os << "algo " << algorithm_name(algo) << '\n';
  os << "market " << market.f0 << ' ' << market.sigma_e << ' ' << market.a_e << ' '
     << market.d_hat << ' ' << market.d0 << ' ' << market.sigma_d << ' ' << market.a_d << ' '
     << market.rho << ' ' << market.maturity << '\n';
  os << "constraints " << constraints.lambda << ' ' << constraints.m_bar << ' '
     << constraints.l_bar << ' ' << constraints.xi << ' ' << constraints.pos_min << ' '
     << constraints.pos_max << ' ' << constraints.x0 << '\n';
  os << "schedule " << schedule.dates.size();
  for (double t : schedule.dates) os << ' ' << t;
  os << '\n';
  os << "seed " << seed << '\n';
  os << "paths " << n_paths << '\n';
  os << "mesh " << mesh.n_f << ' ' << mesh.n_d << '\n';
  os << "grid " << grid.k_min << ' ' << grid.k_max << ' ' << grid.m_steps << ' '
     << grid.l_steps << ' ' << grid.k_lo.size();
  for (std::size_t i = 0; i < grid.k_lo.size(); ++i)
    os << ' ' << grid.k_lo[i] << ' ' << grid.k_hi[i];
  os << '\n';
  os << "nu0 " << nu0 << '\n';
  os << "x " << x << '\n';
  os << "variance " << variance << '\n';
  os << "dates " << dates.size() << '\n';
  for (std::size_t i = 0; i < dates.size(); ++i) {
    const PolicyDate& pd = dates[i];
    os << "date " << i << '\n';
    os << "fbreaks " << pd.partition.f_breaks.size();
    for (double b : pd.partition.f_breaks) os << ' ' << b;
    os << '\n';
    os << "dbreaks " << pd.partition.d_breaks.size() << '\n';
    for (const std::vector<double>& row : pd.partition.d_breaks) {
      os << row.size();
      for (double b : row) os << ' ' << b;
      os << '\n';
    }
    os << "degenerate " << (pd.partition.degenerate ? 1 : 0) << '\n';
    os << "levels " << pd.p_lo << ' ' << pd.p_hi << '\n';
    put(os, pd.value_coef, "value");
    put(os, pd.obj_coef, "obj");
  }
  os << "end\n";
  require(static_cast<bool>(os), "policy file: write failed");
}

void PolicyTable::save_file(const std::string& path) const {
  std::ofstream os(path);
  require(static_cast<bool>(os), "cannot open for writing: " + path);
  save(os);
}

PolicyTable PolicyTable::load(std::istream& is) {
  Reader r(is);
  if (r.word() != kMagic) fail("policy file: bad magic");
  if (r.integer() != kVersion) fail("policy file: unsupported version");

  PolicyTable t;
  r.expect("algo");
  t.algo = algorithm_from_name(r.word());
  r.expect("market");
  t.market.f0 = r.num();
  t.market.sigma_e = r.num();
  t.market.a_e = r.num();
  t.market.d_hat = r.num();
  t.market.d0 = r.num();
  t.market.sigma_d = r.num();
  t.market.a_d = r.num();
  t.market.rho = r.num();
  t.market.maturity = r.num();
  r.expect("constraints");
  t.constraints.lambda = r.num();
  t.constraints.m_bar = r.num();
  t.constraints.l_bar = r.num();
  t.constraints.xi = r.num();
  t.constraints.pos_min = r.num();
  t.constraints.pos_max = r.num();
  t.constraints.x0 = r.num();
  r.expect("schedule");
  t.schedule.dates.resize(static_cast<std::size_t>(r.integer()));
  for (double& d : t.schedule.dates) d = r.num();
  r.expect("seed");
  t.seed = r.u64();
  r.expect("paths");
  t.n_paths = r.u64();
  r.expect("mesh");
  t.mesh.n_f = static_cast<int>(r.integer());
  t.mesh.n_d = static_cast<int>(r.integer());
  r.expect("grid");
  t.grid.k_min = r.integer();
  t.grid.k_max = r.integer();
  t.grid.m_steps = r.integer();
  t.grid.l_steps = r.integer();
  const long n_grid = r.integer();
  require(n_grid >= 0, "policy file: bad grid length");
  t.grid.k_lo.resize(static_cast<std::size_t>(n_grid));
  t.grid.k_hi.resize(static_cast<std::size_t>(n_grid));
  for (long i = 0; i < n_grid; ++i) {
    t.grid.k_lo[i] = r.integer();
    t.grid.k_hi[i] = r.integer();
  }
  r.expect("nu0");
  t.nu0 = r.num();
  r.expect("x");
  t.x = r.num();
  r.expect("variance");
  t.variance = r.num();
  r.expect("dates");
  const long n_dates = r.integer();
  require(n_dates >= 0, "policy file: bad date count");
  t.dates.resize(static_cast<std::size_t>(n_dates));
  for (long i = 0; i < n_dates; ++i) {
    PolicyDate& pd = t.dates[i];
    r.expect("date");
    require(r.integer() == i, "policy file: date blocks out of order");
    r.expect("fbreaks");
    pd.partition.f_breaks.resize(static_cast<std::size_t>(r.integer()));
    for (double& b : pd.partition.f_breaks) b = r.num();
    r.expect("dbreaks");
    const long strata = r.integer();
    require(strata == static_cast<long>(pd.partition.f_breaks.size()) + 1,
            "policy file: stratum count mismatch");
    pd.partition.d_breaks.resize(static_cast<std::size_t>(strata));
    for (std::vector<double>& row : pd.partition.d_breaks) {
      row.resize(static_cast<std::size_t>(r.integer()));
      for (double& b : row) b = r.num();
    }
    pd.partition.rebuild_offsets();
    r.expect("degenerate");
    pd.partition.degenerate = r.integer() != 0;
    r.expect("levels");
    pd.p_lo = r.integer();
    pd.p_hi = r.integer();
    require(pd.p_hi >= pd.p_lo, "policy file: empty level window");
    const std::size_t n_coef = static_cast<std::size_t>(pd.p_hi - pd.p_lo + 1) *
                               static_cast<std::size_t>(pd.partition.n_cells()) * 3;
    pd.value_coef = r.nums("value");
    require(pd.value_coef.size() == n_coef, "policy file: value surface size mismatch");
    pd.obj_coef = r.nums("obj");
    require(pd.obj_coef.size() == n_coef, "policy file: arbitration surface size mismatch");
  }
  r.expect("end");
  return t;
}

PolicyTable PolicyTable::load_file(const std::string& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), "cannot open policy file: " + path);
  return load(is);
}

}  // namespace mvhedge
