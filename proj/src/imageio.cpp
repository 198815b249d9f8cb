#include "unclean/imageio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "unclean/common.hpp"

namespace unclean {

namespace {

uint32_t crc32_table_entry(uint32_t n) {
  for (int k = 0; k < 8; ++k) n = (n & 1) ? 0xedb88320u ^ (n >> 1) : n >> 1;
  return n;
}

uint32_t crc32(const std::vector<uint8_t>& bytes) {
  static uint32_t table[256];
  static bool ready = false;
  if (!ready) {
    for (uint32_t i = 0; i < 256; ++i) table[i] = crc32_table_entry(i);
    ready = true;
  }
  uint32_t c = 0xffffffffu;
  for (uint8_t b : bytes) c = table[(c ^ b) & 0xff] ^ (c >> 8);
  return c ^ 0xffffffffu;
}

uint32_t adler32(const std::vector<uint8_t>& bytes) {
  uint32_t a = 1, b = 0;
  for (uint8_t v : bytes) {
    a = (a + v) % 65521u;
    b = (b + a) % 65521u;
  }
  return (b << 16) | a;
}

void put_be32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(uint8_t(v >> 24));
  out.push_back(uint8_t(v >> 16));
  out.push_back(uint8_t(v >> 8));
  out.push_back(uint8_t(v));
}

void put_chunk(std::vector<uint8_t>& out, const char type[5], const std::vector<uint8_t>& payload) {
  put_be32(out, uint32_t(payload.size()));
  std::vector<uint8_t> body;
  body.reserve(payload.size() + 4);
  for (int i = 0; i < 4; ++i) body.push_back(uint8_t(type[i]));
  body.insert(body.end(), payload.begin(), payload.end());
  put_be32(body, crc32(body));  // CRC covers chunk type + payload
  out.insert(out.end(), body.begin(), body.end());
}

// zlib wrapper around stored (uncompressed) deflate blocks.
std::vector<uint8_t> zlib_store(const std::vector<uint8_t>& raw) {
  std::vector<uint8_t> out;
  out.push_back(0x78);
  out.push_back(0x01);
  size_t off = 0;
  do {
    const size_t take = std::min<size_t>(65535, raw.size() - off);
    const bool last = off + take == raw.size();
    out.push_back(last ? 1 : 0);
    out.push_back(uint8_t(take & 0xff));
    out.push_back(uint8_t(take >> 8));
    out.push_back(uint8_t(~take & 0xff));
    out.push_back(uint8_t((~take >> 8) & 0xff));
    out.insert(out.end(), raw.begin() + off, raw.begin() + off + take);
    off += take;
  } while (off < raw.size());
  put_be32(out, adler32(raw));
  return out;
}

uint8_t quantize(double v) {
  v = std::min(1.0, std::max(0.0, v));
  return uint8_t(std::lround(v * 255.0));
}

void write_png_bytes(const std::vector<uint8_t>& pixels, int w, int h, int channels,
                     const std::string& path) {
  std::vector<uint8_t> raw;  // scanlines with filter byte 0
  raw.reserve(size_t(h) * (size_t(w) * channels + 1));
  for (int y = 0; y < h; ++y) {
    raw.push_back(0);
    const size_t row = size_t(y) * w * channels;
    raw.insert(raw.end(), pixels.begin() + row, pixels.begin() + row + size_t(w) * channels);
  }

  std::vector<uint8_t> png = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<uint8_t> ihdr;
  put_be32(ihdr, uint32_t(w));
  put_be32(ihdr, uint32_t(h));
  ihdr.push_back(8);                                 // bit depth
  ihdr.push_back(channels == 3 ? 2 : 0);             // color type
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  put_chunk(png, "IHDR", ihdr);
  put_chunk(png, "IDAT", zlib_store(raw));
  put_chunk(png, "IEND", {});

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot write PNG: " + path);
  os.write(reinterpret_cast<const char*>(png.data()), std::streamsize(png.size()));
  if (!os) throw ConfigError("short write on PNG: " + path);
}

std::vector<uint8_t> tensor_to_pixels(const ImageTensor& img, int& channels) {
  channels = img.c == 3 ? 3 : 1;
  std::vector<uint8_t> px(size_t(img.h) * img.w * channels);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      for (int c = 0; c < channels; ++c)
        px[(size_t(y) * img.w + x) * channels + c] = quantize(img.at(c, y, x));
  return px;
}

}  // namespace

void write_png(const ImageTensor& img, const std::string& path) {
  require_finite(img, "write_png");
  int channels = 0;
  std::vector<uint8_t> px = tensor_to_pixels(img, channels);
  write_png_bytes(px, img.w, img.h, channels, path);
}

void write_png_strip(const std::vector<ImageTensor>& images, const std::string& path) {
  if (images.empty()) throw ConfigError("write_png_strip: no images");
  const int h = images[0].h, w = images[0].w, c = images[0].c;
  for (const ImageTensor& img : images) {
    require_finite(img, "write_png_strip");
    if (img.h != h || img.w != w || img.c != c)
      throw ConfigError("write_png_strip: images must share one shape");
  }
  const int gap = 2;
  const int total_w = int(images.size()) * w + int(images.size() - 1) * gap;
  ImageTensor strip(h, total_w, c == 3 ? 3 : 1, 1.0);  // white background
  for (size_t k = 0; k < images.size(); ++k) {
    const int x0 = int(k) * (w + gap);
    for (int ch = 0; ch < strip.c; ++ch)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          strip.at(ch, y, x0 + x) = std::min(1.0, std::max(0.0, images[k].at(std::min(ch, c - 1), y, x)));
  }
  write_png(strip, path);
}

ImageTensor normalized_for_display(const ImageTensor& img) {
  double lo = img.data.empty() ? 0.0 : img.data[0], hi = lo;
  for (double v : img.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  ImageTensor out = img;
  if (hi - lo < 1e-12) {
    for (double& v : out.data) v = 0.5;
  } else {
    const double inv = 1.0 / (hi - lo);
    for (double& v : out.data) v = (v - lo) * inv;
  }
  return out;
}

namespace {

std::string svg_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

void write_svg_plot(const std::vector<Series>& series, const std::string& title,
                    const std::string& x_label, const std::string& y_label, const std::string& path) {
  if (series.empty()) throw ConfigError("write_svg_plot: no series");
  double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
  bool first = true;
  for (const Series& s : series) {
    if (s.x.size() != s.y.size()) throw ConfigError("write_svg_plot: ragged series '" + s.label + "'");
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (first) {
        x_lo = x_hi = s.x[i];
        y_lo = y_hi = s.y[i];
        first = false;
      } else {
        x_lo = std::min(x_lo, s.x[i]);
        x_hi = std::max(x_hi, s.x[i]);
        y_lo = std::min(y_lo, s.y[i]);
        y_hi = std::max(y_hi, s.y[i]);
      }
    }
  }
  if (x_hi - x_lo < 1e-12) x_hi = x_lo + 1.0;
  if (y_hi - y_lo < 1e-12) y_hi = y_lo + 1.0;

  const int W = 640, H = 420, ml = 60, mr = 20, mt = 40, mb = 50;
  auto px = [&](double x) { return ml + (x - x_lo) / (x_hi - x_lo) * (W - ml - mr); };
  auto py = [&](double y) { return H - mb - (y - y_lo) / (y_hi - y_lo) * (H - mt - mb); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
  os << "<rect width='" << W << "' height='" << H << "' fill='white'/>\n";
  os << "<text x='" << W / 2 << "' y='24' text-anchor='middle' font-size='16'>"
     << svg_escape(title) << "</text>\n";
  os << "<line x1='" << ml << "' y1='" << H - mb << "' x2='" << W - mr << "' y2='" << H - mb
     << "' stroke='black'/>\n";
  os << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << H - mb
     << "' stroke='black'/>\n";
  os << "<text x='" << (ml + W - mr) / 2 << "' y='" << H - 12 << "' text-anchor='middle' font-size='12'>"
     << svg_escape(x_label) << "</text>\n";
  os << "<text x='16' y='" << (mt + H - mb) / 2 << "' text-anchor='middle' font-size='12' "
     << "transform='rotate(-90 16 " << (mt + H - mb) / 2 << ")'>" << svg_escape(y_label)
     << "</text>\n";
  // Axis extremes as tick labels.
  os << "<text x='" << ml << "' y='" << H - mb + 16 << "' font-size='10'>" << format_double(x_lo)
     << "</text>\n";
  os << "<text x='" << W - mr << "' y='" << H - mb + 16 << "' text-anchor='end' font-size='10'>"
     << format_double(x_hi) << "</text>\n";
  os << "<text x='" << ml - 4 << "' y='" << H - mb << "' text-anchor='end' font-size='10'>"
     << format_double(y_lo) << "</text>\n";
  os << "<text x='" << ml - 4 << "' y='" << mt + 10 << "' text-anchor='end' font-size='10'>"
     << format_double(y_hi) << "</text>\n";

  for (size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* color = colors[k % 6];
    os << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
    for (size_t i = 0; i < s.x.size(); ++i)
      os << format_double(px(s.x[i])) << "," << format_double(py(s.y[i])) << " ";
    os << "'/>\n";
    os << "<text x='" << W - mr - 4 << "' y='" << mt + 16 + 14 * int(k)
       << "' text-anchor='end' font-size='11' fill='" << color << "'>" << svg_escape(s.label)
       << "</text>\n";
  }
  os << "</svg>\n";

  std::ofstream f(path, std::ios::trunc);
  if (!f) throw ConfigError("cannot write SVG: " + path);
  f << os.str();
  if (!f) throw ConfigError("short write on SVG: " + path);
}

}  // namespace unclean
