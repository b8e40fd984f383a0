public class Clamp {
    static int clamp(int value, int low, int high) {
        return value < low ? low : (value > high ? high : value);
    }

    public static void main(String[] args) {
        int x = clamp(15, 0, 10);
        int y = x;
        while (y > 0) {
            y -= 3;
        }
        System.out.println(x + y);
    }
}
