import java.util.ArrayList;
import java.util.List;

public class Grid {
    public static void main(String[] args) {
        List<Integer> cells = new ArrayList<>();
        int rows = 3, cols = 4;
        for (int r = 0; r < rows; r++) {
            for (int c = 0; c < cols; c++) {
                cells.add(r * cols + c);
            }
        }
        int sum = 0;
        for (int cell : cells) {
            sum += cell;
        }
        System.out.println(sum);
    }
}
