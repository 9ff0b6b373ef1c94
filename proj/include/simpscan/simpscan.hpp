#pragma once
#include "dataset.hpp"
#include "detector.hpp"
#include "errors.hpp"
#include "logistic.hpp"
#include "partition.hpp"
#include "report.hpp"
#include "synthetic.hpp"
