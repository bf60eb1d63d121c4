#include "qam/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "qam/error.hpp"

namespace qam::io {

static_assert(std::endian::native == std::endian::little, "binary format assumes a little-endian host");

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return {buf, res.ptr};
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  auto res = std::to_chars(buf, buf + sizeof buf, value, 16);
  std::string s(buf, res.ptr);
  return std::string(16 - s.size(), '0') + s;
}

namespace {

void row(std::string& out, std::initializer_list<std::string> cells) {
  bool first = true;
  for (const auto& c : cells) {
    if (!first) out += ',';
    out += c;
    first = false;
  }
  out += '\n';
}

std::string num(double v) { return format_number(v); }
std::string num(std::size_t v) { return std::to_string(v); }

}  // namespace

std::string fields_csv(const MadelungFields& f, std::size_t point_stride) {
  std::string out = "t,x,rho,S,v,u,flag_low_density\n";
  point_stride = std::max<std::size_t>(point_stride, 1);
  for (std::size_t k = 0; k < f.n_times(); ++k) {
    for (std::size_t i = 0; i < f.grid.n_points; i += point_stride) {
      const std::size_t j = f.index(k, i);
      row(out, {num(f.times[k]), num(f.grid.x(i)), num(f.rho[j]), num(f.action[j]), num(f.drift[j]),
                num(f.osmotic[j]), std::to_string(f.low_density[j])});
    }
  }
  return out;
}

std::string ensemble_csv(const TrajectoryEnsemble& ens, std::size_t max_paths) {
  std::string out = "t,path_id,x\n";
  const std::size_t n = std::min(max_paths, ens.n_paths);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t k = 0; k < ens.n_times(); ++k) {
      if (!ens.valid(p, k)) continue;
      row(out, {num(ens.times[k]), num(p), num(ens.at(p, k))});
    }
  }
  return out;
}

std::string density_csv(const Histogram& h) {
  std::string out = "bin_center,density\n";
  const auto c = h.centers();
  for (std::size_t b = 0; b < c.size(); ++b) row(out, {num(c[b]), num(h.density[b])});
  return out;
}

std::string autocorrelation_csv(const Autocorrelation& corr) {
  if (corr.time_resolved) {
    std::string out = "t,tau,two_point\n";
    const auto& tp = corr.two_point;
    for (std::size_t k = 0; k < tp.t.size(); ++k) {
      for (std::size_t j = 0; j < tp.tau.size(); ++j) {
        const double v = tp.values[k * tp.tau.size() + j];
        if (!std::isnan(v)) row(out, {num(tp.t[k]), num(tp.tau[j]), num(v)});
      }
    }
    return out;
  }
  std::string out = "tau,C,stderr\n";
  for (std::size_t j = 0; j < corr.tau.size(); ++j) row(out, {num(corr.tau[j]), num(corr.c[j]), num(corr.std_error[j])});
  return out;
}

std::string psd_csv(const SpectrumEstimate& s) {
  std::string out = "freq,psd\n";
  for (std::size_t j = 0; j < s.freq.size(); ++j) row(out, {num(s.freq[j]), num(s.psd[j])});
  return out;
}

std::string fpt_csv(const PassageReport& r) {
  std::string out = "path_id,fpt,censored\n";
  for (const auto& rec : r.records) {
    if (rec.status == PassageStatus::qualified) {
      row(out, {num(rec.path), num(rec.time), "0"});
    } else if (rec.status == PassageStatus::censored) {
      row(out, {num(rec.path), "nan", "1"});
    }
  }
  return out;
}

std::string energy_csv(const EnergySeries& s) {
  std::string out = "t,E,stderr\n";
  for (std::size_t k = 0; k < s.times.size(); ++k) row(out, {num(s.times[k]), num(s.mean[k]), num(s.std_error[k])});
  return out;
}

std::string stationary_csv(const StationarySolution& s) {
  std::string out = "x,u,rho\n";
  for (std::size_t i = 0; i < s.grid.n_points; ++i) row(out, {num(s.grid.x(i)), num(s.u_profile[i]), num(s.rho[i])});
  return out;
}

std::string stationary_json(const StationarySolution& s) {
  nlohmann::ordered_json j;
  j["E"] = s.energy;
  j["tol"] = s.tol;
  j["iterations"] = s.iterations;
  j["residual_sup"] = s.residual_sup;
  return j.dump(2) + "\n";
}

std::string action_csv(const std::vector<ActionRow>& rows) {
  std::string out = "functional,estimate,stderr,n_paths,dt_sde,scenario\n";
  for (const auto& r : rows) {
    row(out, {r.functional, num(r.estimate.value), num(r.estimate.std_error), num(r.n_paths), num(r.dt_sde), r.scenario});
  }
  return out;
}

namespace {

constexpr char kMagic[8] = {'Q', 'A', 'M', 'T', 'R', 'A', 'J', '1'};

template <class T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T take(std::string_view bytes, std::size_t& pos) {
  if (pos + sizeof(T) > bytes.size()) throw Error(ErrorKind::io, "truncated ensemble file");
  T value;
  std::memcpy(&value, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

std::string ensemble_binary(const TrajectoryEnsemble& ens) {
  std::string out(kMagic, sizeof kMagic);
  put<std::uint64_t>(out, ens.n_paths);
  put<std::uint64_t>(out, ens.n_times());
  put<std::uint64_t>(out, ens.seed);
  const std::uint64_t flags =
      (ens.direction == Direction::backward ? 1u : 0u) | (ens.stationary ? 2u : 0u);
  put<std::uint64_t>(out, flags);
  put<double>(out, ens.dt_sde);
  for (double t : ens.times) put<double>(out, t);
  for (double x : ens.positions) put<double>(out, x);
  for (auto a : ens.absorbed_at) put<std::int64_t>(out, a);
  return out;
}

TrajectoryEnsemble read_ensemble_binary(std::string_view bytes) {
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorKind::io, "not a QAMTRAJ1 file");
  }
  std::size_t pos = sizeof kMagic;
  TrajectoryEnsemble ens;
  ens.n_paths = take<std::uint64_t>(bytes, pos);
  const auto n_times = take<std::uint64_t>(bytes, pos);
  ens.seed = take<std::uint64_t>(bytes, pos);
  const auto flags = take<std::uint64_t>(bytes, pos);
  ens.direction = (flags & 1u) ? Direction::backward : Direction::forward;
  ens.stationary = (flags & 2u) != 0;
  ens.dt_sde = take<double>(bytes, pos);
  if (n_times == 0 || ens.n_paths > bytes.size() / 8 || n_times > bytes.size() / 8) {
    throw Error(ErrorKind::io, "corrupt ensemble header");
  }
  ens.times.resize(n_times);
  for (auto& t : ens.times) t = take<double>(bytes, pos);
  ens.positions.resize(ens.n_paths * n_times);
  for (auto& x : ens.positions) x = take<double>(bytes, pos);
  ens.absorbed_at.resize(ens.n_paths);
  for (auto& a : ens.absorbed_at) a = take<std::int64_t>(bytes, pos);
  ens.stream_ids.resize(ens.n_paths);
  for (std::size_t p = 0; p < ens.n_paths; ++p) ens.stream_ids[p] = stream_id(p, ens.direction);
  if (pos != bytes.size()) throw Error(ErrorKind::io, "trailing bytes in ensemble file");
  return ens;
}

std::string svg_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series) {
  constexpr double W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!(x1 > x0)) { x0 -= 1; x1 += 1; }
  if (!(y1 > y0)) { y0 -= 1; y1 += 1; }
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label << "</text>\n";
  o << "<text x=\"16\" y=\"" << H / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 " << H / 2
    << ")\">" << y_label << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
    o << "<text x=\"" << px(fx) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"10\">"
      << format_number(std::round(fx * 1000) / 1000) << "</text>\n";
    o << "<text x=\"" << L - 6 << "\" y=\"" << py(fy) + 3 << "\" text-anchor=\"end\" font-size=\"10\">"
      << format_number(std::round(fy * 1000) / 1000) << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    o << "<polyline fill=\"none\" stroke-width=\"1\" stroke=\"" << colors[s % 8] << "\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      if (!std::isfinite(series[s].x[i]) || !std::isfinite(series[s].y[i])) continue;
      o << format_number(px(series[s].x[i])) << ',' << format_number(py(series[s].y[i])) << ' ';
    }
    o << "\"><title>" << series[s].label << "</title></polyline>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(ErrorKind::io, "short write to " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::io, "cannot move " + tmp.string() + " into place");
  }
}

}  // namespace qam::io
