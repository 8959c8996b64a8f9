#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

// Streaming byte and line readers for dump files. Dumps are far larger than
// memory, so everything here is pull-based and holds at most one buffered
// chunk. Containers are stacked by sniffing content: gzip by its magic bytes
// (any input path may be compressed, regardless of extension) and tar by the
// ustar magic in the first block, yielding the lines of every regular-file
// member in archive order.
namespace wikigeo::io {

class ByteSource {
 public:
  virtual ~ByteSource() = default;
  // Returns the number of bytes produced; 0 means end of stream.
  // Throws IoError on unreadable input.
  virtual std::size_t read(char* buf, std::size_t n) = 0;
};

std::unique_ptr<ByteSource> open_file_source(const std::filesystem::path& path);
std::unique_ptr<ByteSource> make_memory_source(std::string bytes);
std::unique_ptr<ByteSource> make_gzip_source(std::unique_ptr<ByteSource> inner);

class LineSource {
 public:
  virtual ~LineSource() = default;
  // Yields the next line without its trailing "\n"/"\r\n"; false at end.
  virtual bool next(std::string& line) = 0;
  // 1-based number of the line most recently returned.
  virtual std::uint64_t line_number() const = 0;
};

// Splits a byte stream into lines, stacking decoders by sniffing: gzip,
// then tar-of-text. open_lines and lines_from_string are conveniences over
// the same composition.
std::unique_ptr<LineSource> make_line_source(std::unique_ptr<ByteSource> bytes);

std::unique_ptr<LineSource> open_lines(const std::filesystem::path& path);
std::unique_ptr<LineSource> lines_from_string(std::string bytes);

class LineSink {
 public:
  virtual ~LineSink() = default;
  virtual void write(std::string_view line) = 0;  // appends '\n'
  // Flushes buffered output; must be called before the file is read back.
  virtual void close() = 0;
};

// Creates parent directories as needed; a ".gz" suffix selects gzip output.
std::unique_ptr<LineSink> open_line_sink(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// Builds a gzip stream in memory (test fixtures and .gz sinks share this).
std::string gzip_compress(std::string_view bytes);

}  // namespace wikigeo::io
