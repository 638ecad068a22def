package com.acme.render;

public class BarRenderer extends AbstractItemRenderer {
    private double margin;

    public BarRenderer() {
        this(1);
    }

    public BarRenderer(int seriesCount) {
        super(seriesCount);
        this.margin = 0.2;
    }

    @Override
    public String rendererName() {
        return "bar";
    }

    public double getMargin() {
        return margin;
    }
}
