#pragma once

#include <cstdint>

namespace msem {

struct Metrics {
  int64_t tp = 0, fp = 0, tn = 0, fn = 0;

  void count(int gold, int predicted) {
    if (gold == 1 && predicted == 1) ++tp;
    else if (gold == 0 && predicted == 1) ++fp;
    else if (gold == 0 && predicted == 0) ++tn;
    else ++fn;
  }

  int64_t total() const { return tp + fp + tn + fn; }
  double accuracy() const;
  double precision() const;
  double recall() const;
  double f1() const;
};

}  // namespace msem
