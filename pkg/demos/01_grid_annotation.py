# coding: utf-8

# # Class grids
#
# Each image is covered by square blocks of 2**n pixels. A block gets one
# class label, and when several classes meet inside a block the rarer class
# wins.

# In[1]:

import numpy as np

from dcmeseg import GridSpec, InstanceLabelMap, build_class_grid, derive_priority
from dcmeseg.core import class_name


# A car (class 3) fills the top half of a 16x16 image and a small person
# (class 1) stands below it. With n=4 the whole image is a single block.

# In[2]:

labels = np.zeros((16, 16), dtype=int)
labels[:8, :] = 1
labels[10:14, 3:5] = 2
scene = InstanceLabelMap(labels, {1: 3, 2: 1})

priority = derive_priority([scene], vocabulary=[1, 3])
grid = build_class_grid(scene, GridSpec(4), priority)
print("priority:", [class_name(c) for c in priority])
print("block label:", class_name(int(grid.labels[0, 0])))


# Halving the block size gives each object its own blocks.

# In[3]:

fine = build_class_grid(scene, GridSpec(2), priority)
print(fine.labels)
