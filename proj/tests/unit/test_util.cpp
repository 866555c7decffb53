#include <atomic>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include <gtest/gtest.h>

#include "aggmark/csv.hpp"
#include "aggmark/parallel.hpp"

using namespace aggmark;

TEST(Format, Numbers) {
  EXPECT_EQ(format_number(0.0), "0");
  EXPECT_EQ(format_number(-0.0), "0");
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(format_number(2.0), "2");
  EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Format, Fnv) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(Format, CsvTable) {
  CsvTable t({"a", "b"});
  t.add_row({"1", "x"});
  EXPECT_THROW(t.add_row({"1"}), std::exception);
  std::ostringstream os;
  t.write(os, "abc");
  EXPECT_EQ(os.str(), "# config_hash=abc\na,b\n1,x\n");
}

TEST(Parallel, RunsEveryIndex) {
  std::vector<std::atomic<int>> hit(100);
  parallel_for(hit.size(), [&](std::size_t i) { hit[i]++; });
  for (auto& h : hit) EXPECT_EQ(h.load(), 1);
}

TEST(Parallel, RethrowsFirstError) {
  setenv("AGGMARK_THREADS", "3", 1);
  EXPECT_THROW(parallel_for(20,
                            [](std::size_t i) {
                              if (i == 7) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
  unsetenv("AGGMARK_THREADS");
}

TEST(Parallel, ThreadCountFromEnvironment) {
  setenv("AGGMARK_THREADS", "5", 1);
  EXPECT_EQ(thread_count(), 5);
  setenv("AGGMARK_THREADS", "zero", 1);
  EXPECT_GE(thread_count(), 1);
  unsetenv("AGGMARK_THREADS");
}
