#include "kflow/lab/artifacts.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace kflow::lab {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[8] = {'K', 'F', 'L', 'O', 'W', 'P', 'H', 'I'};

static_assert(std::endian::native == std::endian::little,
              "snapshot I/O assumes a little-endian host");

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::ifstream& in, const fs::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw ArtifactError("truncated snapshot " + path.string());
  }
  return v;
}

struct Series {
  std::string label;
  std::string color;
  std::vector<std::pair<double, double>> points;
};

// Minimal line chart; log_y plots log10 of positive values only.
std::string svg_chart(const std::string& title, const std::vector<Series>& series, bool log_y) {
  const double W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  auto ty = [&](double y) { return log_y ? std::log10(y) : y; };
  for (const Series& s : series) {
    for (const auto& [x, y] : s.points) {
      if (log_y && !(y > 0.0)) continue;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, ty(y));
      y1 = std::max(y1, ty(y));
    }
  }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (ty(y) - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\">"
    << title << "</text>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  char buf[64];
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0;
    const double yv = y0 + (y1 - y0) * i / 4.0;
    std::snprintf(buf, sizeof buf, "%g", xv);
    o << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 18
      << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" << buf
      << "</text>\n";
    std::snprintf(buf, sizeof buf, log_y ? "1e%.1f" : "%.3g", yv);
    const double yp = H - B - (yv - y0) / (y1 - y0) * (H - T - B);
    o << "<text x=\"" << L - 6 << "\" y=\"" << yp + 4
      << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << buf
      << "</text>\n";
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
    << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">t</text>\n";
  double legend_y = T + 10;
  for (const Series& s : series) {
    o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : s.points) {
      if (log_y && !(y > 0.0)) continue;
      o << px(x) << "," << py(y) << " ";
    }
    o << "\"/>\n";
    o << "<text x=\"" << W - R - 150 << "\" y=\"" << legend_y << "\" font-size=\"12\" fill=\""
      << s.color << "\" font-family=\"sans-serif\">" << s.label << "</text>\n";
    legend_y += 16;
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace

std::string format_trace_csv(const std::vector<EnergyRecord>& records) {
  std::string out = std::string(kTraceHeader) + "\n";
  for (const EnergyRecord& r : records) {
    for (double v : {r.t, r.nu, r.nu_logform, r.dissipation, r.min_phidot, r.max_phidot, r.c_t,
                     r.V_t, r.jensen_floor}) {
      out += g17(v);
      out += ',';
    }
    out += g17(r.dt_used);
    out += '\n';
  }
  return out;
}

void write_trace_csv(const fs::path& path, const std::vector<EnergyRecord>& records) {
  write_text(path, format_trace_csv(records));
}

std::vector<EnergyRecord> read_trace_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) {
    throw ArtifactError("unexpected trace header in " + path.string());
  }
  std::vector<EnergyRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) {
      char* end = nullptr;
      const double x = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) throw ArtifactError("bad number '" + cell + "' in " + path.string());
      v.push_back(x);
    }
    if (v.size() != 10) throw ArtifactError("expected 10 columns in " + path.string());
    out.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9]});
  }
  return out;
}

void write_snapshot(const fs::path& path, double t, const ScalarField& phi) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArtifactError("cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  put<std::int64_t>(out, phi.grid().complex_dim());
  put<std::int64_t>(out, phi.grid().resolution());
  put<double>(out, t);
  const auto values = phi.values();
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!out) throw ArtifactError("failed writing " + path.string());
}

Checkpoint read_snapshot(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw ArtifactError("not a snapshot file: " + path.string());
  }
  const auto n = get<std::int64_t>(in, path);
  const auto N = get<std::int64_t>(in, path);
  const double t = get<double>(in, path);
  const Grid grid(static_cast<int>(n), static_cast<int>(N));
  std::vector<double> values(grid.size());
  if (!in.read(reinterpret_cast<char*>(values.data()),
               static_cast<std::streamsize>(values.size() * sizeof(double)))) {
    throw ArtifactError("truncated snapshot " + path.string());
  }
  return {t, ScalarField(grid, std::move(values))};
}

void write_checkpoints(const fs::path& dir, const std::vector<Checkpoint>& checkpoints) {
  fs::create_directories(dir);
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "phi_%03zu.bin", k);
    write_snapshot(dir / name, checkpoints[k].t, checkpoints[k].phi);
  }
}

std::vector<Checkpoint> read_checkpoints(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ArtifactError("missing directory " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".bin") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Checkpoint> out;
  for (const fs::path& f : files) out.push_back(read_snapshot(f));
  std::stable_sort(out.begin(), out.end(),
                   [](const Checkpoint& a, const Checkpoint& b) { return a.t < b.t; });
  return out;
}

void write_plots(const fs::path& dir, const std::vector<EnergyRecord>& records,
                 const CompareReport* report) {
  fs::create_directories(dir);
  Series nu{"nu", "#1f77b4", {}};
  Series dis{"dissipation", "#d62728", {}};
  for (const EnergyRecord& r : records) {
    nu.points.emplace_back(r.t, r.nu);
    dis.points.emplace_back(r.t, r.dissipation);
  }
  write_text(dir / "energy.svg", svg_chart("energy and dissipation", {nu, dis}, false));
  if (report != nullptr && !report->distances.empty()) {
    Series sup{"sup |u - psi|", "#1f77b4", {}};
    Series l2{"L2 |u - psi|", "#2ca02c", {}};
    Series l2m{"masked L2", "#ff7f0e", {}};
    for (const CheckpointDistance& d : report->distances) {
      sup.points.emplace_back(d.t, d.sup);
      l2.points.emplace_back(d.t, d.l2);
      l2m.points.emplace_back(d.t, d.l2_masked);
    }
    write_text(dir / "distance.svg", svg_chart("distance to the limit", {sup, l2, l2m}, true));
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArtifactError("cannot write " + path.string());
  out << text;
  if (!out) throw ArtifactError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace kflow::lab
