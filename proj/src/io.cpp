#include "wikigeo/io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <utility>
#include <vector>

#include "wikigeo/errors.hpp"

namespace wikigeo::io {

namespace {

constexpr std::size_t kChunk = 64 * 1024;

class FileByteSource : public ByteSource {
 public:
  explicit FileByteSource(const std::filesystem::path& path)
      : path_(path.string()), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open " + path_);
  }

  std::size_t read(char* buf, std::size_t n) override {
    in_.read(buf, static_cast<std::streamsize>(n));
    if (in_.bad()) throw IoError("read failed on " + path_);
    return static_cast<std::size_t>(in_.gcount());
  }

 private:
  std::string path_;
  std::ifstream in_;
};

class MemoryByteSource : public ByteSource {
 public:
  explicit MemoryByteSource(std::string bytes) : bytes_(std::move(bytes)) {}

  std::size_t read(char* buf, std::size_t n) override {
    std::size_t take = std::min(n, bytes_.size() - pos_);
    std::memcpy(buf, bytes_.data() + pos_, take);
    pos_ += take;
    return take;
  }

 private:
  std::string bytes_;
  std::size_t pos_ = 0;
};

// Adds lookahead to a ByteSource so container formats can be sniffed.
class PeekBuffer : public ByteSource {
 public:
  explicit PeekBuffer(std::unique_ptr<ByteSource> inner)
      : inner_(std::move(inner)) {}

  // Copies up to n upcoming bytes without consuming them.
  std::size_t peek(char* buf, std::size_t n) {
    while (stash_.size() - pos_ < n) {
      char tmp[kChunk];
      std::size_t got = inner_->read(tmp, sizeof(tmp));
      if (got == 0) break;
      stash_.append(tmp, got);
    }
    std::size_t have = std::min(n, stash_.size() - pos_);
    std::memcpy(buf, stash_.data() + pos_, have);
    return have;
  }

  std::size_t read(char* buf, std::size_t n) override {
    if (pos_ < stash_.size()) {
      std::size_t take = std::min(n, stash_.size() - pos_);
      std::memcpy(buf, stash_.data() + pos_, take);
      pos_ += take;
      if (pos_ == stash_.size()) {
        stash_.clear();
        pos_ = 0;
      }
      return take;
    }
    return inner_->read(buf, n);
  }

 private:
  std::unique_ptr<ByteSource> inner_;
  std::string stash_;
  std::size_t pos_ = 0;
};

class GzipByteSource : public ByteSource {
 public:
  explicit GzipByteSource(std::unique_ptr<ByteSource> inner)
      : inner_(std::move(inner)), in_(kChunk) {
    // 15+32: accept gzip or zlib headers.
    if (inflateInit2(&strm_, 15 + 32) != Z_OK) {
      throw IoError("inflateInit failed");
    }
  }

  ~GzipByteSource() override { inflateEnd(&strm_); }

  std::size_t read(char* buf, std::size_t n) override {
    strm_.next_out = reinterpret_cast<Bytef*>(buf);
    strm_.avail_out = static_cast<uInt>(n);
    while (strm_.avail_out > 0 && !done_) {
      if (strm_.avail_in == 0 && !input_eof_) {
        std::size_t got = inner_->read(in_.data(), in_.size());
        if (got == 0) input_eof_ = true;
        strm_.next_in = reinterpret_cast<Bytef*>(in_.data());
        strm_.avail_in = static_cast<uInt>(got);
      }
      int ret = inflate(&strm_, Z_NO_FLUSH);
      if (ret == Z_STREAM_END) {
        if (strm_.avail_in > 0 || !input_eof_) {
          // Possibly concatenated gzip members; a clean EOF right after
          // this boundary is still a valid end of stream.
          if (inflateReset(&strm_) != Z_OK) throw IoError("inflateReset failed");
          at_member_boundary_ = true;
        } else {
          done_ = true;
        }
      } else if (ret == Z_OK) {
        at_member_boundary_ = false;
        if (strm_.avail_in == 0 && input_eof_ && strm_.avail_out > 0) {
          throw IoError("truncated gzip stream");
        }
      } else if (ret == Z_BUF_ERROR) {
        if (input_eof_) {
          if (at_member_boundary_) {
            done_ = true;
          } else {
            throw IoError("truncated gzip stream");
          }
        }
      } else {
        throw IoError(std::string("gzip decode error: ") +
                      (strm_.msg ? strm_.msg : "corrupt stream"));
      }
    }
    return n - strm_.avail_out;
  }

 private:
  std::unique_ptr<ByteSource> inner_;
  std::vector<char> in_;
  z_stream strm_{};
  bool input_eof_ = false;
  bool done_ = false;
  bool at_member_boundary_ = false;
};

// Accumulates raw bytes and hands out complete lines.
class LineSplitter {
 public:
  void feed(const char* p, std::size_t n) { buf_.append(p, n); }

  bool pop(std::string& line) {
    std::size_t nl = buf_.find('\n', pos_);
    if (nl == std::string::npos) {
      if (finished_ && pos_ < buf_.size()) {
        line.assign(buf_, pos_, buf_.size() - pos_);
        strip_cr(line);
        pos_ = buf_.size();
        compact();
        return true;
      }
      compact();
      return false;
    }
    line.assign(buf_, pos_, nl - pos_);
    strip_cr(line);
    pos_ = nl + 1;
    if (pos_ > kChunk) compact();
    return true;
  }

  void finish() { finished_ = true; }

 private:
  static void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
  }
  void compact() {
    buf_.erase(0, pos_);
    pos_ = 0;
  }

  std::string buf_;
  std::size_t pos_ = 0;
  bool finished_ = false;
};

class BufferedLineSource : public LineSource {
 public:
  explicit BufferedLineSource(std::unique_ptr<ByteSource> bytes)
      : bytes_(std::move(bytes)) {}

  bool next(std::string& line) override {
    while (true) {
      if (splitter_.pop(line)) {
        ++line_number_;
        return true;
      }
      if (eof_) return false;
      char tmp[kChunk];
      std::size_t got = bytes_->read(tmp, sizeof(tmp));
      if (got == 0) {
        eof_ = true;
        splitter_.finish();
      } else {
        splitter_.feed(tmp, got);
      }
    }
  }

  std::uint64_t line_number() const override { return line_number_; }

 private:
  std::unique_ptr<ByteSource> bytes_;
  LineSplitter splitter_;
  bool eof_ = false;
  std::uint64_t line_number_ = 0;
};

// Streaming ustar reader. Members must be consumed in order.
class TarReader {
 public:
  explicit TarReader(std::unique_ptr<ByteSource> bytes)
      : bytes_(std::move(bytes)) {}

  // Advances to the next regular-file member; false at end of archive.
  bool next_member(std::string& name) {
    skip_member_remainder();
    std::string longname;
    while (true) {
      char header[512];
      if (!read_block(header)) return false;
      if (is_zero_block(header)) return false;
      unsigned long long size = parse_octal(header + 124, 12);
      char type = header[156];
      if (type == 'L') {
        // GNU long name: content holds the next member's name.
        longname = read_content(size);
        skip_padding(size);
        continue;
      }
      if (type == '0' || type == '\0') {
        name = longname.empty() ? header_name(header) : longname;
        remaining_ = size;
        padding_ = (512 - size % 512) % 512;
        return true;
      }
      // Directories, links, pax headers: skip the content.
      skip_bytes(size + (512 - size % 512) % 512);
      longname.clear();
    }
  }

  std::size_t read_member(char* buf, std::size_t n) {
    if (remaining_ == 0) return 0;
    std::size_t want = static_cast<std::size_t>(
        std::min<unsigned long long>(n, remaining_));
    std::size_t got = read_full(buf, want);
    if (got < want) throw IoError("truncated tar member");
    remaining_ -= got;
    return got;
  }

 private:
  static bool is_zero_block(const char* block) {
    for (int i = 0; i < 512; ++i) {
      if (block[i] != 0) return false;
    }
    return true;
  }

  static unsigned long long parse_octal(const char* field, int len) {
    unsigned long long v = 0;
    for (int i = 0; i < len; ++i) {
      char c = field[i];
      if (c == ' ' || c == '\0') {
        if (v > 0) break;
        continue;
      }
      if (c < '0' || c > '7') break;
      v = v * 8 + static_cast<unsigned long long>(c - '0');
    }
    return v;
  }

  static std::string header_name(const char* header) {
    std::string prefix(header + 345, strnlen(header + 345, 155));
    std::string name(header, strnlen(header, 100));
    return prefix.empty() ? name : prefix + "/" + name;
  }

  std::size_t read_full(char* buf, std::size_t n) {
    std::size_t total = 0;
    while (total < n) {
      std::size_t got = bytes_->read(buf + total, n - total);
      if (got == 0) break;
      total += got;
    }
    return total;
  }

  bool read_block(char* block) { return read_full(block, 512) == 512; }

  std::string read_content(unsigned long long size) {
    std::string content(static_cast<std::size_t>(size), '\0');
    if (read_full(content.data(), content.size()) != content.size()) {
      throw IoError("truncated tar member");
    }
    while (!content.empty() && content.back() == '\0') content.pop_back();
    return content;
  }

  void skip_padding(unsigned long long size) {
    skip_bytes((512 - size % 512) % 512);
  }

  void skip_bytes(unsigned long long n) {
    char tmp[kChunk];
    while (n > 0) {
      std::size_t want = static_cast<std::size_t>(
          std::min<unsigned long long>(n, sizeof(tmp)));
      std::size_t got = read_full(tmp, want);
      if (got < want) throw IoError("truncated tar archive");
      n -= got;
    }
  }

  void skip_member_remainder() {
    skip_bytes(remaining_ + padding_);
    remaining_ = 0;
    padding_ = 0;
  }

  std::unique_ptr<ByteSource> bytes_;
  unsigned long long remaining_ = 0;
  unsigned long long padding_ = 0;
};

// Lines of every regular-file member, in archive order. Line numbers are
// global across members so diagnostics stay unambiguous.
class TarLineSource : public LineSource {
 public:
  explicit TarLineSource(std::unique_ptr<ByteSource> bytes)
      : tar_(std::move(bytes)) {}

  bool next(std::string& line) override {
    while (true) {
      if (in_member_) {
        if (splitter_.pop(line)) {
          ++line_number_;
          return true;
        }
        char tmp[kChunk];
        std::size_t got = tar_.read_member(tmp, sizeof(tmp));
        if (got == 0) {
          splitter_.finish();
          if (splitter_.pop(line)) {
            ++line_number_;
            in_member_ = false;
            return true;
          }
          in_member_ = false;
          continue;
        }
        splitter_.feed(tmp, got);
      } else {
        std::string name;
        if (!tar_.next_member(name)) return false;
        splitter_ = LineSplitter();
        in_member_ = true;
      }
    }
  }

  std::uint64_t line_number() const override { return line_number_; }

 private:
  TarReader tar_;
  LineSplitter splitter_;
  bool in_member_ = false;
  std::uint64_t line_number_ = 0;
};

class PlainLineSink : public LineSink {
 public:
  explicit PlainLineSink(const std::filesystem::path& path)
      : path_(path.string()), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open " + path_ + " for writing");
  }

  void write(std::string_view line) override {
    out_.write(line.data(), static_cast<std::streamsize>(line.size()));
    out_.put('\n');
    if (out_.bad()) throw IoError("write failed on " + path_);
  }

  void close() override {
    out_.flush();
    if (out_.bad()) throw IoError("write failed on " + path_);
    out_.close();
  }

 private:
  std::string path_;
  std::ofstream out_;
};

class GzipLineSink : public LineSink {
 public:
  explicit GzipLineSink(const std::filesystem::path& path)
      : path_(path.string()), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open " + path_ + " for writing");
    // 15+16: gzip wrapper.
    if (deflateInit2(&strm_, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 15 + 16, 8,
                     Z_DEFAULT_STRATEGY) != Z_OK) {
      throw IoError("deflateInit failed");
    }
  }

  ~GzipLineSink() override {
    if (!closed_) deflateEnd(&strm_);
  }

  void write(std::string_view line) override {
    pending_.append(line);
    pending_.push_back('\n');
    if (pending_.size() >= 4 * kChunk) drain(Z_NO_FLUSH);
  }

  void close() override {
    drain(Z_FINISH);
    deflateEnd(&strm_);
    closed_ = true;
    out_.flush();
    if (out_.bad()) throw IoError("write failed on " + path_);
    out_.close();
  }

 private:
  void drain(int flush) {
    strm_.next_in = reinterpret_cast<Bytef*>(pending_.data());
    strm_.avail_in = static_cast<uInt>(pending_.size());
    char buf[kChunk];
    do {
      strm_.next_out = reinterpret_cast<Bytef*>(buf);
      strm_.avail_out = sizeof(buf);
      int ret = deflate(&strm_, flush);
      if (ret == Z_STREAM_ERROR) throw IoError("gzip encode error");
      std::size_t produced = sizeof(buf) - strm_.avail_out;
      out_.write(buf, static_cast<std::streamsize>(produced));
      if (out_.bad()) throw IoError("write failed on " + path_);
    } while (strm_.avail_out == 0 ||
             (flush == Z_FINISH && strm_.avail_in > 0));
    pending_.clear();
  }

  std::string path_;
  std::ofstream out_;
  z_stream strm_{};
  std::string pending_;
  bool closed_ = false;
};

bool looks_like_tar(PeekBuffer& pb) {
  char block[512];
  if (pb.peek(block, 512) != 512) return false;
  return std::memcmp(block + 257, "ustar", 5) == 0;
}

std::unique_ptr<LineSource> lines_from_bytes(std::unique_ptr<ByteSource> raw) {
  auto pb = std::make_unique<PeekBuffer>(std::move(raw));
  char magic[2];
  if (pb->peek(magic, 2) == 2 && static_cast<unsigned char>(magic[0]) == 0x1f &&
      static_cast<unsigned char>(magic[1]) == 0x8b) {
    pb = std::make_unique<PeekBuffer>(
        std::make_unique<GzipByteSource>(std::move(pb)));
  }
  if (looks_like_tar(*pb)) {
    return std::make_unique<TarLineSource>(std::move(pb));
  }
  return std::make_unique<BufferedLineSource>(std::move(pb));
}

}  // namespace

std::unique_ptr<ByteSource> open_file_source(
    const std::filesystem::path& path) {
  return std::make_unique<FileByteSource>(path);
}

std::unique_ptr<ByteSource> make_memory_source(std::string bytes) {
  return std::make_unique<MemoryByteSource>(std::move(bytes));
}

std::unique_ptr<ByteSource> make_gzip_source(
    std::unique_ptr<ByteSource> inner) {
  return std::make_unique<GzipByteSource>(std::move(inner));
}

std::unique_ptr<LineSource> make_line_source(
    std::unique_ptr<ByteSource> bytes) {
  return lines_from_bytes(std::move(bytes));
}

std::unique_ptr<LineSource> open_lines(const std::filesystem::path& path) {
  return lines_from_bytes(open_file_source(path));
}

std::unique_ptr<LineSource> lines_from_string(std::string bytes) {
  return lines_from_bytes(make_memory_source(std::move(bytes)));
}

std::unique_ptr<LineSink> open_line_sink(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  if (path.extension() == ".gz") {
    return std::make_unique<GzipLineSink>(path);
  }
  return std::make_unique<PlainLineSink>(path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed on " + path.string());
  return content;
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (out.bad()) throw IoError("write failed on " + path.string());
}

std::string gzip_compress(std::string_view bytes) {
  z_stream strm{};
  if (deflateInit2(&strm, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 15 + 16, 8,
                   Z_DEFAULT_STRATEGY) != Z_OK) {
    throw IoError("deflateInit failed");
  }
  strm.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(bytes.data()));
  strm.avail_in = static_cast<uInt>(bytes.size());
  std::string out;
  char buf[kChunk];
  int ret = Z_OK;
  do {
    strm.next_out = reinterpret_cast<Bytef*>(buf);
    strm.avail_out = sizeof(buf);
    ret = deflate(&strm, Z_FINISH);
    out.append(buf, sizeof(buf) - strm.avail_out);
  } while (ret != Z_STREAM_END);
  deflateEnd(&strm);
  return out;
}

}  // namespace wikigeo::io
