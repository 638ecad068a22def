package com.acme.orders;

import com.acme.money.Money;
import java.util.ArrayList;
import java.util.List;

public class Order {
    private final String id;
    private final List<Line> lines = new ArrayList<>();

    public Order(String id) {
        this.id = id;
    }

    public void add(Line line) {
        lines.add(line);
    }

    public List<Line> lines() {
        return lines;
    }

    public static class Line {
        private final Money unitPrice;
        private final int quantity;

        public Line(Money unitPrice, int quantity) {
            this.unitPrice = unitPrice;
            this.quantity = quantity;
        }

        public Money subtotal() {
            Money total = unitPrice;
            for (int i = 1; i < quantity; i++) {
                total = total.plus(unitPrice);
            }
            return total;
        }
    }
}
