#ifndef LIFE_LIFE_HPP
#define LIFE_LIFE_HPP

#include "life/cme.hpp"
#include "life/common.hpp"
#include "life/correlation.hpp"
#include "life/dataset_io.hpp"
#include "life/dtw.hpp"
#include "life/gradients.hpp"
#include "life/matrix.hpp"
#include "life/metrics.hpp"
#include "life/model.hpp"
#include "life/optimizer.hpp"
#include "life/pot.hpp"
#include "life/sinkhorn.hpp"
#include "life/synthetic.hpp"
#include "life/time_series.hpp"
#include "life/train.hpp"

#endif  // LIFE_LIFE_HPP
