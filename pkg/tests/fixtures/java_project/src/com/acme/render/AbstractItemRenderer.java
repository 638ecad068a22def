package com.acme.render;

import java.util.ArrayList;
import java.util.List;

/**
 * Base class for item renderers. Cannot be instantiated directly.
 */
public abstract class AbstractItemRenderer implements LegendSource {

    private final List<String> labels = new ArrayList<>();
    private int seriesCount;

    protected AbstractItemRenderer(int seriesCount) {
        this.seriesCount = seriesCount;
    }

    public abstract String rendererName();

    @Override
    public String getLegendItemLabel(int series) {
        if (series < 0 || series >= seriesCount) {
            throw new IllegalArgumentException("series out of range: " + series);
        }
        return rendererName() + "-" + series;
    }

    public int getSeriesCount() {
        return seriesCount;
    }

    protected void addLabel(String label) {
        labels.add(label);
    }
}
