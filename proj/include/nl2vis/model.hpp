#pragma once

#include "nl2vis/model/autograd.hpp"
#include "nl2vis/model/bridge.hpp"
#include "nl2vis/model/checkpoint.hpp"
#include "nl2vis/model/config.hpp"
#include "nl2vis/model/ops.hpp"
#include "nl2vis/model/optimizer.hpp"
#include "nl2vis/model/parameters.hpp"
#include "nl2vis/model/seq2seq.hpp"
#include "nl2vis/model/tensor.hpp"
#include "nl2vis/model/train.hpp"
