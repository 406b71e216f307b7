#!/usr/bin/env python3
"""Writes data/mini_face_cascade.xml, a stump cascade keyed to the renderer's face.

Usage: make_mini_cascade.py [eyes bridge hair mouth balance] > mini_face_cascade.xml

Thresholds are in units of the window standard deviation. The first four
stages fire when the feature exceeds its threshold; the last accepts a
left/right difference inside +/- balance.
"""
import sys

# (x, y, w, h, weight) in the 24x24 base window
FEATURES = [
    [(7, 9, 10, 2, -1), (7, 11, 10, 2, 1)],    # eye band darker than cheeks
    [(7, 9, 10, 2, -1), (10, 9, 4, 2, 2.5)],   # bridge brighter than eyes
    [(7, 4, 10, 2, -1), (7, 6, 10, 2, 1)],     # hair darker than forehead
    [(9, 15, 6, 2, -1), (9, 12, 6, 2, 1)],     # mouth darker than cheeks
    [(4, 6, 8, 13, -1), (12, 6, 8, 13, 1)],    # left half vs right half
]
DEFAULTS = [0.03, 0.015, 0.04, 0.015, 0.02]


def stage(stumps, threshold):
    out = ['    <_>', f'      <maxWeakCount>{len(stumps)}</maxWeakCount>',
           f'      <stageThreshold>{threshold:g}</stageThreshold>', '      <weakClassifiers>']
    for feature, thr, left, right in stumps:
        out += ['        <_>', f'          <internalNodes>0 -1 {feature} {thr:g}</internalNodes>',
                f'          <leafValues>{left:g} {right:g}</leafValues></_>']
    out[-1] += '</weakClassifiers></_>'
    return out


def main():
    thr = [float(x) for x in sys.argv[1:]] or DEFAULTS
    if len(thr) != len(DEFAULTS):
        sys.exit(f'expected {len(DEFAULTS)} thresholds')
    *one_sided, band = thr
    out = ['<?xml version="1.0"?>',
           '<!-- Five-stage stump cascade for the synthetic renderer face: eye band, eye bridge,',
           '     hair line, mouth, left/right balance. Not a general face detector. -->',
           '<opencv_storage>', '<cascade type_id="opencv-cascade-classifier">',
           '  <stageType>BOOST</stageType>', '  <featureType>HAAR</featureType>',
           '  <height>24</height>', '  <width>24</width>',
           '  <stageParams><maxWeakCount>2</maxWeakCount></stageParams>',
           '  <featureParams><maxCatCount>0</maxCatCount></featureParams>',
           f'  <stageNum>{len(FEATURES)}</stageNum>', '  <stages>']
    for i, t in enumerate(one_sided):
        out += stage([(i, t, 0, 1)], 0.5)
    last = len(FEATURES) - 1
    out += stage([(last, -band, 0, 1), (last, band, 1, 0)], 1.5)
    out += ['  </stages>', '  <features>']
    for f in FEATURES:
        out += ['    <_>', '      <rects>']
        out += [f'        <_>{x} {y} {w} {h} {wt:g}</_>' for x, y, w, h, wt in f]
        out += ['      </rects></_>']
    out += ['  </features>', '</cascade>', '</opencv_storage>']
    print('\n'.join(out))


if __name__ == '__main__':
    main()
